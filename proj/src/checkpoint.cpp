#include "tucker/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tucker/errors.hpp"

namespace tucker {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'T', 'K', 'E', 'R'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> bn_rows(const BatchNormState& bn) {
  std::vector<double> out;
  out.reserve(4 * bn.features());
  for (const auto* v : {&bn.scale, &bn.shift, &bn.running_mean, &bn.running_var}) {
    out.insert(out.end(), v->begin(), v->end());
  }
  return out;
}

BatchNormState bn_from_rows(const StoredArray& a, std::size_t features, double momentum,
                            double epsilon, const fs::path& path) {
  if (a.dims.size() != 2 || a.dims[0] != 4 || a.dims[1] != features) {
    throw DataError(path.string() + ": expected a 4 x " + std::to_string(features) + " array");
  }
  BatchNormState bn(features);
  const auto it = a.values.begin();
  const auto f = static_cast<std::ptrdiff_t>(features);
  bn.scale.assign(it, it + f);
  bn.shift.assign(it + f, it + 2 * f);
  bn.running_mean.assign(it + 2 * f, it + 3 * f);
  bn.running_var.assign(it + 3 * f, it + 4 * f);
  bn.momentum = momentum;
  bn.epsilon = epsilon;
  return bn;
}

}  // namespace

std::size_t array_header_size(std::size_t rank) {
  const std::size_t raw = 8 + 4 * rank;
  return std::max<std::size_t>(16, (raw + 7) / 8 * 8);
}

void write_array(const fs::path& path, std::span<const std::uint32_t> dims,
                 std::span<const double> values) {
  std::size_t expected = 1;
  for (auto d : dims) expected *= d;
  if (expected != values.size()) {
    throw ShapeError("write_array: dims hold " + std::to_string(expected) + " values, got " +
                     std::to_string(values.size()));
  }
  std::string bytes(kMagic, 4);
  put_u32(bytes, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(bytes, d);
  bytes.resize(array_header_size(dims.size()), '\0');
  bytes.reserve(bytes.size() + 8 * values.size());
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

StoredArray read_array(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || std::memcmp(p, kMagic, 4) != 0) {
    throw DataError(path.string() + ": not a TKER array");
  }
  const std::uint32_t rank = get_u32(p + 4);
  if (rank > 8) throw DataError(path.string() + ": implausible rank " + std::to_string(rank));
  const std::size_t header = array_header_size(rank);
  if (bytes.size() < header) throw DataError(path.string() + ": truncated header");
  StoredArray a;
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    a.dims.push_back(get_u32(p + 8 + 4 * i));
    count *= a.dims.back();
  }
  if (bytes.size() != header + 8 * count) {
    throw DataError(path.string() + ": expected " + std::to_string(count) + " values");
  }
  a.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(p[header + 8 * i + b]) << (8 * b);
    }
    a.values[i] = std::bit_cast<double>(bits);
  }
  return a;
}

void save_checkpoint(const fs::path& dir, const TuckerModel& m, const Vocabulary* vocab) {
  m.validate();
  fs::create_directories(dir);
  const auto u32 = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  const std::uint32_t e_dims[] = {u32(m.entities.rows()), u32(m.entities.cols())};
  const std::uint32_t r_dims[] = {u32(m.relations.rows()), u32(m.relations.cols())};
  const std::uint32_t w_dims[] = {u32(m.core.dim1()), u32(m.core.dim2()), u32(m.core.dim3())};
  const std::uint32_t bn_dims[] = {4, u32(m.entity_dim())};
  write_array(dir / "E.bin", e_dims, m.entities.data());
  write_array(dir / "R.bin", r_dims, m.relations.data());
  write_array(dir / "W.bin", w_dims, m.core.data());
  write_array(dir / "bn_input.bin", bn_dims, bn_rows(m.bn_input));
  write_array(dir / "bn_hidden.bin", bn_dims, bn_rows(m.bn_hidden));

  std::ofstream meta(dir / "meta.txt");
  if (!meta) throw DataError("cannot write " + (dir / "meta.txt").string());
  meta << "format_version " << kCheckpointFormatVersion << '\n'
       << "n_e " << m.num_entities() << '\n'
       << "n_r_aug " << m.num_relations() << '\n'
       << "d_e " << m.entity_dim() << '\n'
       << "d_r " << m.relation_dim() << '\n'
       << "model_kind " << to_string(m.kind.tag) << '\n'
       << "base_dim " << m.kind.base_dim << '\n'
       << "batch_norm " << (m.batch_norm ? 1 : 0) << '\n'
       << "bn_momentum " << format_double(m.bn_input.momentum) << '\n'
       << "bn_epsilon " << format_double(m.bn_input.epsilon) << '\n'
       << "dropout_input " << format_double(m.dropout.input) << '\n'
       << "dropout_relation " << format_double(m.dropout.relation) << '\n'
       << "dropout_hidden " << format_double(m.dropout.hidden) << '\n';
  if (vocab) {
    vocab->save_entities(dir / "entities.dict");
    vocab->save_relations(dir / "relations.dict");
    meta << "entities_file entities.dict\n"
         << "relations_file relations.dict\n";
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("checkpoint directory not found: " + dir.string());
  std::map<std::string, std::string> meta;
  {
    std::istringstream in(read_file(dir / "meta.txt"));
    std::string key, value;
    while (in >> key >> value) meta[key] = value;
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError("meta.txt: missing " + key);
    return it->second;
  };
  auto count = [&](const std::string& key) { return std::stoull(field(key)); };
  auto real = [&](const std::string& key) { return std::stod(field(key)); };

  if (std::stoi(field("format_version")) != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format version " + field("format_version"));
  }
  const std::size_t n_e = count("n_e"), n_r = count("n_r_aug");
  const std::size_t d_e = count("d_e"), d_r = count("d_r");

  auto load_matrix = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto a = read_array(dir / name);
    if (a.dims.size() != 2 || a.dims[0] != rows || a.dims[1] != cols) {
      throw DataError(name + ": shape does not match meta.txt");
    }
    return DenseMatrix(rows, cols, std::move(a.values));
  };

  Checkpoint ckpt;
  TuckerModel& m = ckpt.model;
  m.entities = load_matrix("E.bin", n_e, d_e);
  m.relations = load_matrix("R.bin", n_r, d_r);
  auto w = read_array(dir / "W.bin");
  if (w.dims.size() != 3 || w.dims[0] != d_e || w.dims[1] != d_r || w.dims[2] != d_e) {
    throw DataError("W.bin: shape does not match meta.txt");
  }
  m.core = DenseTensor3(d_e, d_r, d_e, std::move(w.values));
  const double momentum = real("bn_momentum"), epsilon = real("bn_epsilon");
  m.bn_input = bn_from_rows(read_array(dir / "bn_input.bin"), d_e, momentum, epsilon,
                            dir / "bn_input.bin");
  m.bn_hidden = bn_from_rows(read_array(dir / "bn_hidden.bin"), d_e, momentum, epsilon,
                             dir / "bn_hidden.bin");
  m.batch_norm = count("batch_norm") != 0;
  m.dropout = {real("dropout_input"), real("dropout_relation"), real("dropout_hidden")};
  m.kind = {parse_model_tag(field("model_kind")), count("base_dim")};
  m.validate();

  if (meta.contains("entities_file")) {
    ckpt.vocab = Vocabulary::load(dir / field("entities_file"), dir / field("relations_file"));
    if (ckpt.vocab->num_entities() != n_e || ckpt.vocab->num_augmented_relations() != n_r) {
      throw DataError("checkpoint vocabulary does not match model dimensions");
    }
  }
  return ckpt;
}

}  // namespace tucker
