#include "lffpe/serialization.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lffpe {

ParseError::ParseError(const std::string &msg, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

namespace {

constexpr char kMagic[8] = {'L', 'F', 'P', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class U> void put_le(std::ostream &out, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <class U> U get_le(std::istream &in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(U)))
    throw ParseError("checkpoint truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

std::string get_bytes(std::istream &in, std::uint64_t n) {
  if (n > (std::uint64_t{1} << 32))
    throw ParseError("checkpoint field length is implausible");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw ParseError("checkpoint truncated");
  return s;
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r')
    s.pop_back();
  return s;
}

} // namespace

void write_checkpoint(std::ostream &out, const Checkpoint &ckpt) {
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kVersion);
  const std::string header = serialize_spec(ckpt.spec);
  put_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_le<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto &[name, t] : ckpt.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape())
      put_le<std::uint64_t>(out, d);
    for (double v : t.data())
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out)
    throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream &in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic))
    throw ParseError("not a checkpoint file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.spec = parse_spec(get_bytes(in, get_le<std::uint64_t>(in)));
  const auto count = get_le<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_bytes(in, get_le<std::uint32_t>(in));
    const auto rank = get_le<std::uint32_t>(in);
    if (rank > 8)
      throw ParseError("tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto &d : shape)
      d = get_le<std::uint64_t>(in);
    std::vector<double> data(shape_volume(shape));
    for (auto &v : data)
      v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

std::vector<NamedTensor> to_named(const EncoderParams &params) {
  std::vector<NamedTensor> out;
  if (const auto *p = std::get_if<FourierPEParams>(&params)) {
    for (const auto &slot : kParamSlots)
      if (!((*p).*slot.member).empty())
        out.emplace_back(std::string(slot.name), (*p).*slot.member);
  } else if (const auto *t = std::get_if<EmbedTable>(&params)) {
    for (std::size_t i = 0; i < t->tables.size(); ++i)
      out.emplace_back("table" + std::to_string(i), t->tables[i]);
  }
  return out;
}

EncoderParams from_named(const EncoderSpec &spec, const std::vector<NamedTensor> &tensors) {
  auto find = [&](const std::string &name) -> const Tensor * {
    for (const auto &[n, t] : tensors)
      if (n == name)
        return &t;
    return nullptr;
  };
  if (const auto *f = std::get_if<FourierMlp>(&spec)) {
    FourierPEParams p;
    for (const auto &slot : kParamSlots) {
      const bool needed = (slot.name == "w_r" && f->config.features == FeatureMap::Fourier) ||
                          slot.name == "w1" || slot.name == "b1" || slot.name == "w2" ||
                          slot.name == "b2" ||
                          (slot.name.starts_with("ln") && f->config.layer_norm);
      if (!needed)
        continue;
      const Tensor *t = find(std::string(slot.name));
      if (!t)
        throw ParseError("checkpoint is missing tensor '" + std::string(slot.name) + "'");
      p.*slot.member = *t;
    }
    check_params(p, f->config);
    return p;
  }
  if (const auto *e = std::get_if<EmbedND>(&spec)) {
    EmbedTable table;
    for (std::size_t i = 0; i < e->vocab.size(); ++i) {
      const Tensor *t = find("table" + std::to_string(i));
      if (!t)
        throw ParseError("checkpoint is missing tensor 'table" + std::to_string(i) + "'");
      if (t->shape() != Shape{e->vocab[i], e->widths[i]})
        throw ShapeError("table" + std::to_string(i) + " has shape " + shape_to_string(t->shape()));
      table.tables.push_back(*t);
    }
    return table;
  }
  return std::monostate{};
}

void save_checkpoint(const std::string &path, const EncoderSpec &spec, const EncoderParams &params,
                     std::vector<NamedTensor> extra) {
  Checkpoint ckpt{spec, to_named(params)};
  for (auto &e : extra)
    ckpt.tensors.push_back(std::move(e));
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  write_checkpoint(out, ckpt);
}

std::pair<EncoderSpec, EncoderParams> load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open checkpoint '" + path + "'");
  Checkpoint ckpt = read_checkpoint(in);
  EncoderParams params = from_named(ckpt.spec, ckpt.tensors);
  return {std::move(ckpt.spec), std::move(params)};
}

PositionBatch read_positions_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("positions file is empty", 1);
  const auto header = split_csv(strip_cr(line));
  // Header names are g<group>m<coord>, groups outer.
  std::size_t groups = 0, coords = 0;
  for (const auto &name : header) {
    unsigned g = 0, m = 0;
    char tail = 0;
    if (std::sscanf(name.c_str(), "g%um%u%c", &g, &m, &tail) != 2)
      throw ParseError("bad header column '" + name + "', expected g<i>m<j>", 1);
    groups = std::max<std::size_t>(groups, g + 1);
    coords = std::max<std::size_t>(coords, m + 1);
  }
  if (header.empty() || groups * coords != header.size())
    throw ParseError("header does not describe a full G x M grid", 1);
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] != "g" + std::to_string(i / coords) + "m" + std::to_string(i % coords))
      throw ParseError("header column " + std::to_string(i + 1) + " should be g" +
                           std::to_string(i / coords) + "m" + std::to_string(i % coords),
                       1);

  std::vector<double> values;
  std::size_t line_no = 1, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty())
      continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns, found " +
                           std::to_string(cells.size()),
                       line_no);
    for (const auto &c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception &) {
        used = std::string::npos;
      }
      if (used != c.size() || !std::isfinite(v))
        throw ParseError("'" + c + "' is not a finite number", line_no);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0)
    throw ParseError("positions file has no rows", line_no);
  return PositionBatch(Tensor({rows, groups, coords}, std::move(values)));
}

void write_positions_csv(std::ostream &out, const PositionBatch &x) {
  for (std::size_t i = 0; i < x.width(); ++i)
    out << (i ? "," : "") << 'g' << i / x.coords() << 'm' << i % x.coords();
  out << '\n';
  for (std::size_t n = 0; n < x.count(); ++n) {
    const auto p = x.position(n);
    for (std::size_t i = 0; i < p.size(); ++i)
      out << (i ? "," : "") << format_number(p[i]);
    out << '\n';
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream &out, const Tensor &m, std::string_view prefix) {
  const std::size_t cols = m.cols();
  for (std::size_t j = 0; j < cols; ++j)
    out << (j ? "," : "") << prefix << j;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < cols; ++j)
      out << (j ? "," : "") << format_number(row[j]);
    out << '\n';
  }
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace lffpe
