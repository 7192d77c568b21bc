// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/index/index_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "ragdx/core/error.hpp"

namespace ragdx {
namespace {

constexpr std::array<char, 4> kIndexMagic{'R', 'G', 'D', 'X'};
constexpr std::array<char, 4> kHeadMagic{'R', 'G', 'P', 'H'};

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<char>(u & 0xff));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }
  void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) fail(Errc::IoError, "failed writing " + path.string());
  }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) : origin_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::ArtifactMissing, "cannot open " + origin_);
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  template <typename T>
  T get() {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u = static_cast<U>(u | (static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i)));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  const std::string& origin() const noexcept { return origin_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(Errc::TruncatedFile, origin_ + ": unexpected end of file");
  }

  std::string origin_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

void check_magic(ByteReader& r, const std::array<char, 4>& magic) {
  if (r.remaining() < magic.size()) fail(Errc::TruncatedFile, r.origin() + ": missing magic");
  const std::string m = r.get_string(magic.size());
  if (std::memcmp(m.data(), magic.data(), magic.size()) != 0) {
    fail(Errc::BadMagic, r.origin() + ": bad magic bytes");
  }
}

std::uint16_t f16_bits(float v) {
  return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(v));
}

float f16_value(std::uint16_t bits) {
  return static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
}

void put_embedding(ByteWriter& w, const Embedding& e, DType dtype) {
  for (float v : e.values()) {
    if (dtype == DType::f16) {
      w.put(f16_bits(v));
    } else {
      w.put_f32(v);
    }
  }
}

Embedding get_embedding(ByteReader& r, std::size_t d, DType dtype) {
  std::vector<float> v(d);
  for (auto& x : v) x = dtype == DType::f16 ? f16_value(r.get<std::uint16_t>()) : r.get_f32();
  return Embedding(std::move(v), dtype);
}

}  // namespace

float quantize_f16(float value) { return f16_value(f16_bits(value)); }

void write_index(const Index& index, const std::filesystem::path& path) {
  ByteWriter w;
  w.put_bytes(kIndexMagic.data(), kIndexMagic.size());
  w.put(kIndexVersion);
  w.put(static_cast<std::uint32_t>(index.dimension()));
  w.put(static_cast<std::uint8_t>(index.storage()));
  w.put(static_cast<std::uint64_t>(index.size()));
  for (const auto& rec : index.records()) {
    if (rec.payload_ref.size() > std::numeric_limits<std::uint32_t>::max() ||
        rec.source_tag.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail(Errc::InvalidArgument, "record " + std::to_string(raw(rec.id)) + ": string too long");
    }
    w.put(raw(rec.id));
    put_embedding(w, rec.image, index.storage());
    put_embedding(w, rec.text, index.storage());
    w.put(static_cast<std::uint32_t>(rec.payload_ref.size()));
    w.put_bytes(rec.payload_ref.data(), rec.payload_ref.size());
    w.put(static_cast<std::uint16_t>(rec.source_tag.size()));
    w.put_bytes(rec.source_tag.data(), rec.source_tag.size());
  }
  w.save(path);
}

Index read_index(const std::filesystem::path& path, std::optional<std::size_t> expected_dimension) {
  ByteReader r(path);
  check_magic(r, kIndexMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kIndexVersion) {
    fail(Errc::VersionMismatch, r.origin() + ": index version " + std::to_string(version));
  }
  const auto dim = r.get<std::uint32_t>();
  if (dim == 0) fail(Errc::DimensionMismatch, r.origin() + ": zero dimension");
  if (expected_dimension && *expected_dimension != dim) {
    fail(Errc::DimensionMismatch, r.origin() + ": dimension " + std::to_string(dim) +
                                      ", expected " + std::to_string(*expected_dimension));
  }
  const auto tag = r.get<std::uint8_t>();
  if (tag > 1) fail(Errc::ParseError, r.origin() + ": unknown dtype tag " + std::to_string(tag));
  const auto dtype = static_cast<DType>(tag);
  const auto count = r.get<std::uint64_t>();

  Index index(dim, dtype);
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexRecord rec;
    rec.id = RecordId{r.get<std::uint64_t>()};
    rec.image = get_embedding(r, dim, dtype);
    rec.text = get_embedding(r, dim, dtype);
    rec.payload_ref = r.get_string(r.get<std::uint32_t>());
    rec.source_tag = r.get_string(r.get<std::uint16_t>());
    index.add(std::move(rec));
  }
  if (!r.at_end()) fail(Errc::ParseError, r.origin() + ": trailing bytes after last record");
  return index;
}

void write_head(const ProjectionHead& head, const std::filesystem::path& path) {
  ByteWriter w;
  w.put_bytes(kHeadMagic.data(), kHeadMagic.size());
  w.put(kHeadVersion);
  w.put(static_cast<std::uint8_t>(head.head));
  const auto d = static_cast<Eigen::Index>(head.dimension());
  w.put(static_cast<std::uint32_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) w.put_f64(head.weight(i, j));
  }
  for (Eigen::Index i = 0; i < d; ++i) w.put_f64(head.bias[i]);
  w.save(path);
}

ProjectionHead read_head(const std::filesystem::path& path) {
  ByteReader r(path);
  check_magic(r, kHeadMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kHeadVersion) {
    fail(Errc::VersionMismatch, r.origin() + ": head version " + std::to_string(version));
  }
  const auto tag = r.get<std::uint8_t>();
  if (tag > 1) fail(Errc::ParseError, r.origin() + ": unknown head tag");
  const auto d = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  if (d == 0) fail(Errc::DimensionMismatch, r.origin() + ": zero dimension");
  ProjectionHead head{static_cast<Head>(tag), Eigen::MatrixXd(d, d), Eigen::VectorXd(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) head.weight(i, j) = r.get_f64();
  }
  for (Eigen::Index i = 0; i < d; ++i) head.bias[i] = r.get_f64();
  if (!r.at_end()) fail(Errc::ParseError, r.origin() + ": trailing bytes");
  if (!head.is_finite()) fail(Errc::NonFinite, r.origin() + ": non-finite head parameters");
  return head;
}

namespace {

constexpr std::string_view kCorpusHeader = "#ragdx-corpus\t1";

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<float> parse_floats(std::string_view s, const std::string& where) {
  std::vector<float> out;
  for (auto tok : split(s, ',')) {
    float v = 0.0f;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail(Errc::ParseError, where + ": bad float '" + std::string(tok) + "'");
    }
    out.push_back(v);
  }
  return out;
}

void append_floats(std::string& line, std::span<const float> values) {
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line.push_back(',');
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
    line.append(buf, p);
  }
}

std::vector<float> l2_normalized(std::vector<float> v) {
  double n = 0.0;
  for (float x : v) n += double(x) * x;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (float& x : v) x = static_cast<float>(x / n);
  }
  return v;
}

}  // namespace

Index ingest_corpus(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "cannot open corpus " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCorpusHeader) {
    fail(Errc::BadMagic, path.string() + ": missing '#ragdx-corpus' header");
  }
  std::vector<IndexRecord> records;
  std::size_t line_no = 1;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() != 5) fail(Errc::ParseError, where + ": expected 5 tab-separated fields");
    std::uint64_t id = 0;
    auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
    if (ec != std::errc() || p != fields[0].data() + fields[0].size()) {
      fail(Errc::ParseError, where + ": bad record id");
    }
    auto image = parse_floats(fields[1], where);
    auto text = parse_floats(fields[2], where);
    if (options.normalize) {
      image = l2_normalized(std::move(image));
      text = l2_normalized(std::move(text));
    }
    if (options.storage == DType::f16) {
      for (auto& x : image) x = quantize_f16(x);
      for (auto& x : text) x = quantize_f16(x);
    }
    if (dim == 0) dim = image.size();
    if (image.size() != dim || text.size() != dim) {
      fail(Errc::DimensionMismatch, where + ": embedding dimension differs from first record");
    }
    records.push_back({RecordId{id}, Embedding(std::move(image), options.storage),
                       Embedding(std::move(text), options.storage), std::string(fields[3]),
                       std::string(fields[4])});
  }
  if (records.empty()) fail(Errc::EmptyIndex, path.string() + ": no records");
  std::sort(records.begin(), records.end(),
            [](const IndexRecord& a, const IndexRecord& b) { return raw(a.id) < raw(b.id); });
  Index index(dim, options.storage);
  for (auto& rec : records) index.add(std::move(rec));
  return index;
}

void write_corpus(const Index& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  out << kCorpusHeader << '\n';
  std::string line;
  for (const auto& rec : index.records()) {
    for (const auto* s : {&rec.payload_ref, &rec.source_tag}) {
      if (s->find_first_of("\t\n") != std::string::npos) {
        fail(Errc::InvalidArgument, "record " + std::to_string(raw(rec.id)) +
                                        ": tab or newline in a text field");
      }
    }
    line = std::to_string(raw(rec.id));
    line.push_back('\t');
    append_floats(line, rec.image.values());
    line.push_back('\t');
    append_floats(line, rec.text.values());
    line += '\t' + rec.payload_ref + '\t' + rec.source_tag + '\n';
    out << line;
  }
  if (!out) fail(Errc::IoError, "failed writing " + path.string());
}

}  // namespace ragdx
