#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lffpe/encoder_spec.hpp"

namespace lffpe {

/// Raised for malformed input files; `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &msg, std::size_t line = 0);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

using NamedTensor = std::pair<std::string, Tensor>;

/*
 * Checkpoint container, all integers little-endian:
 *
 *   "LFPECKPT"            8-byte magic
 *   u32 version           currently 1
 *   u64 n, n bytes        header: serialize_spec() text (variant + config)
 *   u64 count             number of tensors
 *   count x {
 *     u32 n, n bytes      tensor name
 *     u32 rank
 *     u64 x rank          dimensions
 *     f64 x volume        payload, row-major
 *   }
 */
struct Checkpoint {
  EncoderSpec spec;
  std::vector<NamedTensor> tensors;
};

void write_checkpoint(std::ostream &out, const Checkpoint &ckpt);
Checkpoint read_checkpoint(std::istream &in);

/// Flattens encoder parameters into named tensors ("w_r", "w1", ...,
/// or "table0", "table1", ... for embeddings).
std::vector<NamedTensor> to_named(const EncoderParams &params);
/// Rebuilds parameters for `spec`; missing or misshapen tensors throw.
EncoderParams from_named(const EncoderSpec &spec, const std::vector<NamedTensor> &tensors);

void save_checkpoint(const std::string &path, const EncoderSpec &spec, const EncoderParams &params,
                     std::vector<NamedTensor> extra = {});
std::pair<EncoderSpec, EncoderParams> load_checkpoint(const std::string &path);

/// Positions CSV: header g0m0,g0m1,...,g{G-1}m{M-1}, one position per row.
/// The header fixes G and M.
PositionBatch read_positions_csv(std::istream &in);
void write_positions_csv(std::ostream &out, const PositionBatch &x);

/// 17 significant digits, '.' decimal separator.
std::string format_number(double v);

/// [rows, cols] matrix as CSV with header prefix0,prefix1,...
void write_matrix_csv(std::ostream &out, const Tensor &m, std::string_view prefix);

std::string read_text_file(const std::string &path);

} // namespace lffpe
