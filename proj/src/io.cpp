#include "ldw/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ldw::io {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'D', 'W', 'T'};
constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("container truncated while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4, "values"))); }
  double f64() { return std::bit_cast<double>(le(8, "values")); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view token, const char* what) {
  double v = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw FormatError(std::string("invalid number '") + std::string(token) + "' in " + what);
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  return {std::istream_iterator<std::string>(is), std::istream_iterator<std::string>()};
}

std::vector<std::string> nonblank_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

FeatureMap make_map_or_throw(std::size_t c, std::size_t h, std::size_t w,
                             std::vector<double> data, const std::string& what) {
  try {
    return FeatureMap(c, h, w, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace

const FeatureMap* TensorContainer::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.map;
  }
  return nullptr;
}

const FeatureMap& TensorContainer::get(std::string_view name) const {
  if (const FeatureMap* m = find(name)) return *m;
  throw FormatError("container has no tensor named '" + std::string(name) + "'");
}

std::vector<std::uint8_t> encode_container(const TensorContainer& container) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(container.dtype));
  w.u32(static_cast<std::uint32_t>(container.tensors.size()));
  for (const auto& t : container.tensors) {
    if (t.name.size() > 255) throw FormatError("tensor name longer than 255 bytes");
    w.u8(static_cast<std::uint8_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.map.channels()));
    w.u32(static_cast<std::uint32_t>(t.map.height()));
    w.u32(static_cast<std::uint32_t>(t.map.width()));
    for (double v : t.map.data()) {
      if (container.dtype == DType::f32) {
        w.f32(static_cast<float>(v));
      } else {
        w.f64(v);
      }
    }
  }
  return w.take();
}

TensorContainer decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(sizeof kMagic, "magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("not a tensor container (bad magic)");
  }
  r.str(sizeof kMagic, "magic");
  const std::uint8_t version = r.u8("version");
  if (version != kVersion) {
    throw FormatError("unsupported container version " + std::to_string(version));
  }
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype > 1) throw FormatError("unknown container dtype " + std::to_string(dtype));
  TensorContainer out;
  out.dtype = static_cast<DType>(dtype);
  const std::size_t elem = out.dtype == DType::f32 ? 4 : 8;
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint8_t name_len = r.u8("name length");
    std::string name = r.str(name_len, "name");
    const std::uint64_t c = r.u32("shape");
    const std::uint64_t h = r.u32("shape");
    const std::uint64_t w = r.u32("shape");
    const std::uint64_t n = c * h * w;
    if (n > r.remaining() / elem) {
      throw FormatError("tensor '" + name + "' declares more values than the file holds");
    }
    std::vector<double> data(n);
    for (auto& v : data) v = out.dtype == DType::f32 ? static_cast<double>(r.f32()) : r.f64();
    out.tensors.push_back({name, make_map_or_throw(c, h, w, std::move(data), "tensor '" + name + "'")});
  }
  if (r.remaining() != 0) {
    throw FormatError("container has " + std::to_string(r.remaining()) +
                      " trailing bytes beyond its declared tensors");
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

TensorContainer read_container(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_container(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_container(const std::filesystem::path& path, const TensorContainer& container) {
  write_bytes(path, encode_container(container));
}

TensorContainer subbands_to_container(const SubbandSet& s, DType dtype) {
  return {dtype, {{"LL", s.ll}, {"LH", s.lh}, {"HL", s.hl}, {"HH", s.hh}}};
}

SubbandSet subbands_from_container(const TensorContainer& container) {
  for (const char* name : {"LL", "LH", "HL", "HH"}) {
    if (!container.find(name)) {
      throw FormatError(std::string("missing subband '") + name + "' in container");
    }
  }
  try {
    return SubbandSet::from_maps(container.get("LL"), container.get("LH"), container.get("HL"),
                                 container.get("HH"));
  } catch (const DimensionError& e) {
    throw FormatError(e.what());
  }
}

TensorContainer attention_to_container(const AttentionParams& p, DType dtype) {
  const std::size_t c = p.channels();
  const std::size_t h = p.hidden();
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  return {dtype,
          {{"w1", FeatureMap(1, h, c, vec(p.w1()))},
           {"b1", FeatureMap(1, 1, h, vec(p.b1()))},
           {"w2", FeatureMap(1, c, h, vec(p.w2()))},
           {"b2", FeatureMap(1, 1, c, vec(p.b2()))}}};
}

AttentionParams attention_from_container(const TensorContainer& container) {
  const FeatureMap& w1 = container.get("w1");
  const FeatureMap& b1 = container.get("b1");
  const FeatureMap& w2 = container.get("w2");
  const FeatureMap& b2 = container.get("b2");
  const std::size_t c = w1.width();
  const std::size_t h = w1.height();
  if (h == 0 || c % h != 0) {
    throw FormatError("attention w1 shape does not define a valid reduction");
  }
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  try {
    return AttentionParams(c, c / h, vec(w1.data()), vec(b1.data()), vec(w2.data()),
                           vec(b2.data()));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("attention parameters: ") + e.what());
  }
}

bool looks_like_pgm(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5');
}

FeatureMap decode_pgm(std::span<const std::uint8_t> bytes) {
  if (!looks_like_pgm(bytes)) throw FormatError("not a PGM image (expected P2 or P5)");
  const bool binary = bytes[1] == '5';
  std::size_t pos = 2;

  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) -> std::uint32_t {
    skip_space_and_comments();
    std::uint64_t v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 0xFFFFFFFFu) throw FormatError(std::string("PGM ") + what + " out of range");
      ++pos;
    }
    if (pos == start) throw FormatError(std::string("PGM: expected ") + what);
    return static_cast<std::uint32_t>(v);
  };

  const std::uint32_t width = read_uint("width");
  const std::uint32_t height = read_uint("height");
  const std::uint32_t maxval = read_uint("maxval");
  if (width == 0 || height == 0) throw FormatError("PGM: zero width or height");
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM: maxval must be in [1, 65535]");

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> data(n);
  const double scale = 1.0 / maxval;
  if (binary) {
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
      throw FormatError("PGM: missing whitespace after header");
    }
    ++pos;
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (bytes.size() - pos < n * bpp) throw FormatError("PGM: pixel data truncated");
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t v = bytes[pos + i * bpp];
      if (bpp == 2) v = (v << 8) | bytes[pos + i * bpp + 1];
      if (v > maxval) throw FormatError("PGM: pixel exceeds maxval");
      data[i] = v * scale;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t v = read_uint("pixel value");
      if (v > maxval) throw FormatError("PGM: pixel exceeds maxval");
      data[i] = v * scale;
    }
  }
  return FeatureMap(1, height, width, std::move(data));
}

FeatureMap read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {
std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}
}  // namespace

void write_pgm(const std::filesystem::path& path, const FeatureMap& map) {
  const std::string header =
      "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (double v : map.channel(0)) bytes.push_back(to_byte(v));
  write_bytes(path, bytes);
}

FeatureMap quantize_8bit(const FeatureMap& map) {
  std::vector<double> out(map.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(map.data()[i]) / 255.0;
  return FeatureMap(map.channels(), map.height(), map.width(), std::move(out));
}

FeatureMap read_map(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    if (looks_like_pgm(bytes)) return decode_pgm(bytes);
    TensorContainer c = decode_container(bytes);
    if (c.tensors.size() != 1) {
      throw FormatError("expected a single-tensor container, found " +
                        std::to_string(c.tensors.size()) + " tensors");
    }
    return std::move(c.tensors.front().map);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_filters(const WaveletFilterPair& pair) {
  std::string s = std::to_string(pair.taps()) + "\n";
  auto line = [&s](std::span<const double> taps) {
    for (std::size_t i = 0; i < taps.size(); ++i) {
      if (i) s += ' ';
      s += format_double(taps[i]);
    }
    s += '\n';
  };
  line(pair.low());
  line(pair.high());
  return s;
}

WaveletFilterPair parse_filters(const std::string& text) {
  const auto lines = nonblank_lines(text);
  if (lines.size() != 3) {
    throw FormatError("filter file must have 3 lines (K, low taps, high taps), found " +
                      std::to_string(lines.size()));
  }
  const auto k_tokens = split_ws(lines[0]);
  std::size_t k = 0;
  if (k_tokens.size() != 1 ||
      std::from_chars(k_tokens[0].data(), k_tokens[0].data() + k_tokens[0].size(), k).ptr !=
          k_tokens[0].data() + k_tokens[0].size()) {
    throw FormatError("filter file: first line must be the tap count");
  }
  auto taps = [k](const std::string& line, const char* which) {
    const auto tokens = split_ws(line);
    if (tokens.size() != k) {
      throw FormatError(std::string("filter file: ") + which + " line has " +
                        std::to_string(tokens.size()) + " taps, expected " + std::to_string(k));
    }
    std::vector<double> v;
    for (const auto& t : tokens) v.push_back(parse_double(t, "filter file"));
    return v;
  };
  try {
    return WaveletFilterPair(taps(lines[1], "low"), taps(lines[2], "high"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("filter file: ") + e.what());
  }
}

WaveletFilterPair read_filters(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return parse_filters(std::string(bytes.begin(), bytes.end()));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_filters(const std::filesystem::path& path, const WaveletFilterPair& pair) {
  const std::string s = format_filters(pair);
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::string format_train_log(const TrainReport& report) {
  std::string s;
  for (const auto& r : report.history) {
    s += std::to_string(r.epoch);
    for (double v : {r.task_loss, r.wavelet_loss, r.total_loss, r.residuals.low_energy,
                     r.residuals.low_sum, r.residuals.high_sum, r.residuals.high_energy}) {
      s += '\t';
      s += format_double(v);
    }
    s += '\n';
  }
  return s;
}

std::vector<EpochRecord> parse_train_log(const std::string& text) {
  std::vector<EpochRecord> out;
  for (const auto& line : nonblank_lines(text)) {
    const auto t = split_ws(line);
    if (t.size() != 8) throw FormatError("training log line must have 8 fields");
    EpochRecord r{};
    r.epoch = static_cast<std::size_t>(parse_double(t[0], "training log"));
    r.task_loss = parse_double(t[1], "training log");
    r.wavelet_loss = parse_double(t[2], "training log");
    r.total_loss = parse_double(t[3], "training log");
    r.residuals = {parse_double(t[4], "training log"), parse_double(t[5], "training log"),
                   parse_double(t[6], "training log"), parse_double(t[7], "training log")};
    out.push_back(r);
  }
  return out;
}

}  // namespace ldw::io
