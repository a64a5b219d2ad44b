#include "rmrp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rmrp {

namespace {

constexpr char kMagic[4] = {'R', 'M', 'R', 'P'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <class U>
  void uint(U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof(U));
  }
  void u8(std::uint8_t v) { uint(v); }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw std::runtime_error("checkpoint truncated");
    }
  }
  template <class U>
  U uint() {
    unsigned char buf[sizeof(U)];
    bytes(buf, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    return v;
  }
  std::uint8_t u8() { return uint<std::uint8_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  Eigen::VectorXd vec(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }

 private:
  std::istream& in_;
};

// Guards against absurd allocations from a corrupt header.
constexpr std::uint64_t kMaxElements = 1ULL << 30;

}  // namespace

void write_checkpoint(std::ostream& out, const ParametricField& field,
                      const AdamWState* optimizer) {
  const RandomFeatureMap& map = field.feature_map();
  const SparseProjection& proj = field.projection();
  Writer w(out);
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(field.kind()));
  w.u8(static_cast<std::uint8_t>(field.head().task));
  w.u8(static_cast<std::uint8_t>(map.activation()));
  w.u8(static_cast<std::uint8_t>(proj.kind()));
  w.u32(static_cast<std::uint32_t>(map.input_dim()));
  w.u32(static_cast<std::uint32_t>(map.feature_dim()));
  w.u32(static_cast<std::uint32_t>(proj.rows()));
  w.f64(proj.density());
  w.u64(map.seed());
  w.u64(proj.seed());
  w.f64(map.scale());
  w.f64(proj.magnitude());
  for (int i = 0; i < map.feature_dim(); ++i) {
    for (int j = 0; j < map.input_dim(); ++j) w.f64(map.weights()(i, j));
  }
  w.vec(map.biases());
  const auto entries = proj.entries();
  w.u64(entries.size());
  for (const auto& e : entries) {
    w.u32(e.row);
    w.u32(e.col);
    w.u8(static_cast<std::uint8_t>(e.sign));
  }
  w.vec(field.head().weights);
  w.u8(optimizer ? 1 : 0);
  if (optimizer) {
    if (optimizer->first_moment.size() != proj.rows() ||
        optimizer->second_moment.size() != proj.rows()) {
      throw std::invalid_argument("optimizer state does not match head length");
    }
    w.f64(optimizer->config.learning_rate);
    w.f64(optimizer->config.weight_decay);
    w.f64(optimizer->config.rate1);
    w.f64(optimizer->config.rate2);
    w.f64(optimizer->config.epsilon);
    w.u64(static_cast<std::uint64_t>(optimizer->step));
    w.vec(optimizer->first_moment);
    w.vec(optimizer->second_moment);
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not an RMRP checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint8_t kind = r.u8();
  const std::uint8_t task = r.u8();
  const std::uint8_t activation = r.u8();
  const std::uint8_t proj_kind = r.u8();
  if (kind > 2 || task > 1 || activation != 0 || proj_kind > 1) {
    throw std::runtime_error("checkpoint header has invalid enum values");
  }
  const std::uint32_t d = r.u32();
  const std::uint32_t m = r.u32();
  const std::uint32_t k = r.u32();
  if (static_cast<std::uint64_t>(m) * d > kMaxElements || k > kMaxElements) {
    throw std::runtime_error("checkpoint dimensions out of range");
  }
  const double density = r.f64();
  const std::uint64_t feature_seed = r.u64();
  const std::uint64_t projection_seed = r.u64();
  const double scale = r.f64();
  const double magnitude = r.f64();

  Eigen::MatrixXd weights(m, d);
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) weights(i, j) = r.f64();
  }
  Eigen::VectorXd biases = r.vec(m);
  const std::uint64_t nnz = r.u64();
  if (nnz > static_cast<std::uint64_t>(m) * k) throw std::runtime_error("checkpoint nnz too large");
  std::vector<SparseProjection::Entry> entries(nnz);
  for (auto& e : entries) {
    e.row = r.u32();
    e.col = r.u32();
    e.sign = static_cast<std::int8_t>(r.u8());
  }
  Eigen::VectorXd head = r.vec(k);

  RandomFeatureMap map(std::move(weights), std::move(biases), feature_seed, scale,
                       static_cast<Activation>(activation));
  SparseProjection proj =
      SparseProjection::from_entries(static_cast<int>(k), static_cast<int>(m), density,
                                     projection_seed, magnitude,
                                     static_cast<ProjectionKind>(proj_kind), entries);
  Checkpoint cp{ParametricField(std::move(map), std::move(proj),
                                LinearHead{std::move(head), static_cast<Task>(task)},
                                static_cast<FieldKind>(kind)),
                std::nullopt};
  const std::uint8_t has_optimizer = r.u8();
  if (has_optimizer > 1) throw std::runtime_error("checkpoint optimizer flag invalid");
  if (has_optimizer) {
    AdamWState state;
    state.config.learning_rate = r.f64();
    state.config.weight_decay = r.f64();
    state.config.rate1 = r.f64();
    state.config.rate2 = r.f64();
    state.config.epsilon = r.f64();
    state.step = static_cast<std::int64_t>(r.u64());
    state.first_moment = r.vec(k);
    state.second_moment = r.vec(k);
    cp.optimizer = std::move(state);
  }
  return cp;
}

void save_checkpoint(const std::string& path, const ParametricField& field,
                     const AdamWState* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  write_checkpoint(out, field, optimizer);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

std::size_t checkpoint_bytes(const ParametricField& field, const AdamWState* optimizer) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, field, optimizer);
  return out.str().size();
}

}  // namespace rmrp
