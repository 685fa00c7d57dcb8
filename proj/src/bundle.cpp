#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cfa/error.hpp"
#include "cfa/pipeline.hpp"

// Model bundle layout (all integers and floats little-endian):
//   "CFAMODEL" | u32 version | u64 payload size | payload | u32 crc32(payload)
// payload:
//   str config (key=value text)
//   pca:     u8 centered, u64 dim, u64 p, f64 mean[dim], f64 eigvals[p], f64 basis[dim*p] (column-major)
//   gallery: u64 N, u64 L, i32 labels[N], u8 degenerate[N], f64 values[N*L] (row-major)
//   u8 bank tag (0 linear, 1 kernel)
//   linear:  u8 kind, u64 p, u64 L, f64 omega_s, f64 omega_n,
//            per filter: i32 class, u8 least_squares, f64 H[2p] (re, im interleaved)
//   kernel:  u8 kernel, f64 delta, i32 degree, f64 offset, u8 noise, f64 lambda, u64 seed,
//            f64 omega_s, f64 omega_n, u64 N, u64 p,
//            per spectrum: i32 label, str source_id, f64 values[2p]
//            u64 L, per filter: i32 class, f64 jitter, i32 escalations, u8 noise, f64 lambda, f64 alpha[2N]
// str = u64 length + bytes.

namespace cfa::pipeline {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'A', 'M', 'O', 'D', 'E', 'L'};

class Writer {
 public:
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void complex_vec(const ComplexVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      f64(v[i].real());
      f64(v[i].imag());
    }
  }

 private:
  template <class U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string str() {
    const auto n = count(1);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  ComplexVector complex_vec(std::uint64_t n) {
    need(n * 16);
    ComplexVector v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
      const double re = f64();
      v[static_cast<Eigen::Index>(i)] = Complex(re, f64());
    }
    return v;
  }
  /// Element count read from the stream, checked against remaining bytes.
  std::uint64_t count(std::uint64_t element_size) {
    const auto n = u64();
    if (element_size != 0 && n > (size_ - pos_) / element_size) fail();
    return n;
  }
  bool done() const { return pos_ == size_; }

 private:
  template <class U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  void need(std::uint64_t n) {
    if (n > size_ - pos_) fail();
  }
  [[noreturn]] static void fail() { throw ValidationError("model bundle is truncated or malformed"); }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_linear(Writer& w, const filters::FilterBank& bank) {
  w.u8(static_cast<std::uint8_t>(bank.kind));
  w.u64(static_cast<std::uint64_t>(bank.p));
  w.u64(bank.filters.size());
  w.f64(bank.params.omega_s);
  w.f64(bank.params.omega_n);
  for (const auto& f : bank.filters) {
    w.i32(f.class_id);
    w.u8(f.least_squares ? 1 : 0);
    w.complex_vec(f.H);
  }
}

filters::FilterBank read_linear(Reader& r) {
  filters::FilterBank bank;
  const auto kind = r.u8();
  if (kind > 2) throw ValidationError("model bundle: unknown filter kind");
  bank.kind = static_cast<filters::FilterKind>(kind);
  bank.p = static_cast<int>(r.u64());
  const auto L = r.count(1);
  bank.params.omega_s = r.f64();
  bank.params.omega_n = r.f64();
  for (std::uint64_t l = 0; l < L; ++l) {
    filters::CorrelationFilter f;
    f.class_id = r.i32();
    f.least_squares = r.u8() != 0;
    f.H = r.complex_vec(static_cast<std::uint64_t>(bank.p));
    f.kind = bank.kind;
    f.params = bank.params;
    bank.filters.push_back(std::move(f));
  }
  return bank;
}

void write_kernel(Writer& w, const kernel::KernelBank& bank) {
  w.u8(static_cast<std::uint8_t>(bank.kernel.kind));
  w.f64(bank.kernel.delta);
  w.i32(bank.kernel.degree);
  w.f64(bank.kernel.offset);
  w.u8(static_cast<std::uint8_t>(bank.noise.kind));
  w.f64(bank.noise.lambda);
  w.u64(bank.noise.seed);
  w.f64(bank.params.omega_s);
  w.f64(bank.params.omega_n);
  w.u64(bank.train->size());
  w.u64(static_cast<std::uint64_t>(bank.p()));
  for (const auto& s : *bank.train) {
    w.i32(s.label);
    w.str(s.source_id);
    w.complex_vec(s.values);
  }
  w.u64(bank.filters.size());
  for (const auto& f : bank.filters) {
    w.i32(f.class_id);
    w.f64(f.jitter);
    w.i32(f.escalations);
    w.u8(static_cast<std::uint8_t>(f.noise.kind));
    w.f64(f.noise.lambda);
    w.complex_vec(f.alpha);
  }
}

kernel::KernelBank read_kernel(Reader& r) {
  kernel::KernelBank bank;
  const auto kk = r.u8();
  if (kk > 2) throw ValidationError("model bundle: unknown kernel kind");
  bank.kernel.kind = static_cast<kernel::KernelKind>(kk);
  bank.kernel.delta = r.f64();
  bank.kernel.degree = r.i32();
  bank.kernel.offset = r.f64();
  const auto nk = r.u8();
  if (nk > 1) throw ValidationError("model bundle: unknown kernel noise mode");
  bank.noise.kind = static_cast<kernel::NoiseKind>(nk);
  bank.noise.lambda = r.f64();
  bank.noise.seed = r.u64();
  bank.params.omega_s = r.f64();
  bank.params.omega_n = r.f64();
  const auto n = r.count(4);
  const auto p = r.u64();
  auto train = std::make_shared<std::vector<spectral::Spectrum>>();
  for (std::uint64_t i = 0; i < n; ++i) {
    spectral::Spectrum s;
    s.label = r.i32();
    s.source_id = r.str();
    s.values = r.complex_vec(p);
    train->push_back(std::move(s));
  }
  bank.train = std::move(train);
  const auto L = r.count(1);
  for (std::uint64_t l = 0; l < L; ++l) {
    kernel::KernelFilter f;
    f.class_id = r.i32();
    f.jitter = r.f64();
    f.escalations = r.i32();
    const auto fk = r.u8();
    if (fk > 1) throw ValidationError("model bundle: unknown kernel noise mode");
    f.noise = bank.noise;
    f.noise.kind = static_cast<kernel::NoiseKind>(fk);
    f.noise.lambda = r.f64();
    f.alpha = r.complex_vec(n);
    f.kernel = bank.kernel;
    f.params = bank.params;
    bank.filters.push_back(std::move(f));
  }
  return bank;
}

}  // namespace

std::vector<std::uint8_t> serialize(const ModelBundle& bundle) {
  Writer body;
  body.str(bundle.config.to_key_values().to_string());

  const auto& pca = bundle.pca;
  body.u8(pca.centered ? 1 : 0);
  body.u64(static_cast<std::uint64_t>(pca.input_dim()));
  body.u64(static_cast<std::uint64_t>(pca.p()));
  for (Eigen::Index i = 0; i < pca.mean.size(); ++i) body.f64(pca.mean[i]);
  for (Eigen::Index i = 0; i < pca.eigvals.size(); ++i) body.f64(pca.eigvals[i]);
  for (Eigen::Index c = 0; c < pca.basis.cols(); ++c) {
    for (Eigen::Index r = 0; r < pca.basis.rows(); ++r) body.f64(pca.basis(r, c));
  }

  body.u64(static_cast<std::uint64_t>(bundle.gallery.rows()));
  body.u64(static_cast<std::uint64_t>(bundle.gallery.cols()));
  for (auto l : bundle.gallery_labels) body.i32(l);
  for (auto d : bundle.gallery_degenerate) body.u8(d);
  for (Eigen::Index r = 0; r < bundle.gallery.rows(); ++r) {
    for (Eigen::Index c = 0; c < bundle.gallery.cols(); ++c) body.f64(bundle.gallery(r, c));
  }

  if (const auto* lb = std::get_if<filters::FilterBank>(&bundle.bank)) {
    body.u8(0);
    write_linear(body, *lb);
  } else {
    body.u8(1);
    write_kernel(body, std::get<kernel::KernelBank>(bundle.bank));
  }

  Writer out;
  out.bytes.insert(out.bytes.end(), std::begin(kMagic), std::end(kMagic));
  out.u32(bundle.format_version);
  out.u64(body.bytes.size());
  out.bytes.insert(out.bytes.end(), body.bytes.begin(), body.bytes.end());
  out.u32(static_cast<std::uint32_t>(crc32(0L, body.bytes.data(), static_cast<uInt>(body.bytes.size()))));
  return std::move(out.bytes);
}

ModelBundle deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 8 + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ValidationError("not a model bundle (bad magic)");
  }
  Reader header(bytes.data() + sizeof kMagic, 12);
  const auto version = header.u32();
  if (version != ModelBundle::kFormatVersion) {
    throw ValidationError("model bundle version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(ModelBundle::kFormatVersion) + ")");
  }
  const auto size = header.u64();
  const std::size_t offset = sizeof kMagic + 12;
  if (size != bytes.size() - offset - 4) throw ValidationError("model bundle is truncated (size mismatch)");
  const std::uint8_t* body = bytes.data() + offset;
  Reader trailer(body + size, 4);
  const auto stored_crc = trailer.u32();
  const auto crc = static_cast<std::uint32_t>(crc32(0L, body, static_cast<uInt>(size)));
  if (crc != stored_crc) throw ValidationError("model bundle checksum mismatch (file corrupted)");

  Reader r(body, static_cast<std::size_t>(size));
  ModelBundle b;
  b.format_version = version;
  b.config = PipelineConfig::from_key_values(KeyValues::parse(r.str()));

  b.pca.centered = r.u8() != 0;
  const auto dim = r.count(8);
  const auto p = r.u64();
  b.pca.mean.resize(static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < dim; ++i) b.pca.mean[static_cast<Eigen::Index>(i)] = r.f64();
  b.pca.eigvals.resize(static_cast<Eigen::Index>(p));
  for (std::uint64_t i = 0; i < p; ++i) b.pca.eigvals[static_cast<Eigen::Index>(i)] = r.f64();
  b.pca.basis.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(p));
  for (std::uint64_t c = 0; c < p; ++c) {
    for (std::uint64_t row = 0; row < dim; ++row) {
      b.pca.basis(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = r.f64();
    }
  }

  const auto n = r.count(5);
  const auto L = r.u64();
  b.gallery_labels.resize(n);
  b.gallery_degenerate.resize(n);
  for (auto& l : b.gallery_labels) l = r.i32();
  for (auto& d : b.gallery_degenerate) d = r.u8();
  b.gallery.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  for (std::uint64_t row = 0; row < n; ++row) {
    for (std::uint64_t c = 0; c < L; ++c) b.gallery(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = r.f64();
  }

  const auto tag = r.u8();
  if (tag == 0) {
    b.bank = read_linear(r);
  } else if (tag == 1) {
    b.bank = read_kernel(r);
  } else {
    throw ValidationError("model bundle: unknown bank tag");
  }
  if (!r.done()) throw ValidationError("model bundle has trailing bytes");
  return b;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = serialize(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write model: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing model: " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing model: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace cfa::pipeline
