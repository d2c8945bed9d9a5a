#include "evsl/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "evsl/errors.hpp"

namespace evsl::io {

namespace {

using json = nlohmann::json;

// ---- little-endian primitives ----

template <typename T>
void put(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

void put_f32(std::string& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  put(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  float get_f32() {
    const auto bits = get<std::uint32_t>();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }

  std::string bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("file is truncated");
  }

  std::string data_;
  std::size_t pos_ = 0;
};

void put_header(std::string& out, const std::array<char, 8>& magic, int width, int height,
                std::uint64_t start, std::uint64_t count) {
  out.append(magic.data(), magic.size());
  put<std::uint16_t>(out, kFormatVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(width));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(height));
  put<std::uint16_t>(out, 0);
  put<std::uint64_t>(out, start);
  put<std::uint64_t>(out, count);
}

struct Header {
  int width = 0;
  int height = 0;
  std::uint64_t start = 0;
  std::uint64_t count = 0;
};

Header get_header(Reader& r, const std::array<char, 8>& magic, const char* what) {
  if (r.bytes(magic.size()) != std::string(magic.data(), magic.size())) {
    throw FormatError(std::string("bad magic bytes: not a ") + what + " file");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kFormatVersion) {
    throw FormatError("unsupported " + std::string(what) + " file version " +
                      std::to_string(version));
  }
  Header h;
  h.width = r.get<std::uint16_t>();
  h.height = r.get<std::uint16_t>();
  r.get<std::uint16_t>();
  h.start = r.get<std::uint64_t>();
  h.count = r.get<std::uint64_t>();
  return h;
}

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0 || width > 65535 || height > 65535) {
    throw FormatError("image dimensions must lie in [1, 65535]");
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  return out;
}

template <typename T>
T parse_num(const std::string& s) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw FormatError("trailing characters in '" + s + "'");
      return static_cast<T>(v);
    } else {
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw FormatError("trailing characters in '" + s + "'");
      return static_cast<T>(v);
    }
  } catch (const std::logic_error&) {
    throw FormatError("malformed number '" + s + "'");
  }
}

std::vector<std::string> csv_lines(const fs::path& path, const std::string& header) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> lines;
  if (!std::getline(in, line) || line != header) {
    throw FormatError("unexpected CSV header in " + path.string());
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      lines.push_back(line);
      continue;
    }
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// ---- PNG helpers (classic libpng API) ----

struct PngImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  int color_type = PNG_COLOR_TYPE_GRAY;
  std::vector<std::uint8_t> data;  ///< packed rows; 1-bit rows expanded to one byte per pixel
  std::size_t row_bytes = 0;
  std::vector<png_color> palette;
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

void write_png(const fs::path& path, const PngImage& img) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw FormatError("cannot write " + path.string());
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialization failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.row_bytes);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("PNG write failed: " + error);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               img.bit_depth, img.color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (!img.palette.empty()) {
    png_set_PLTE(png, info, img.palette.data(), static_cast<int>(img.palette.size()));
  }
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

PngImage read_png(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw FormatError("cannot open " + path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng initialization failed");
  }
  PngImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG read failed: " + error);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.bit_depth = png_get_bit_depth(png, info);
  img.color_type = png_get_color_type(png, info);
  png_colorp pal = nullptr;
  int n_pal = 0;
  if (png_get_PLTE(png, info, &pal, &n_pal) == PNG_INFO_PLTE) {
    img.palette.assign(pal, pal + n_pal);
  }
  if (img.bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  img.row_bytes = png_get_rowbytes(png, info);
  img.data.resize(img.row_bytes * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, img.data.data() + static_cast<std::size_t>(y) * img.row_bytes, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::array<std::uint8_t, 3> jet(double v) {
  const auto ch = [](double x) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(1.5 - std::abs(x), 0.0, 1.0)));
  };
  const double x = 4.0 * v;
  return {ch(x - 3.0), ch(x - 2.0), ch(x - 1.0)};
}

CameraIntrinsics parse_intrinsics(const json& j) {
  CameraIntrinsics c;
  c.focal_x = j.at("fx").get<double>();
  c.focal_y = j.at("fy").get<double>();
  c.principal_x = j.at("cx").get<double>();
  c.principal_y = j.at("cy").get<double>();
  c.radial = {j.at("k1").get<double>(), j.at("k2").get<double>()};
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

json intrinsics_json(const CameraIntrinsics& c) {
  return {{"fx", c.focal_x}, {"fy", c.focal_y}, {"cx", c.principal_x}, {"cy", c.principal_y},
          {"k1", c.radial[0]}, {"k2", c.radial[1]}, {"width", c.width}, {"height", c.height}};
}

}  // namespace

// ---- text ----

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

// ---- event streams ----

namespace {

struct MergedRecord {
  std::uint16_t x, y;
  std::uint64_t t;
  std::uint8_t polarity;
  RecordKind kind;
};

std::vector<MergedRecord> merge(const EventStream& s) {
  std::vector<MergedRecord> out;
  out.reserve(s.events.size() + s.triggers.size());
  std::size_t i = 0, j = 0;
  while (i < s.events.size() || j < s.triggers.size()) {
    const bool take_trigger =
        j < s.triggers.size() && (i == s.events.size() || s.triggers[j].t <= s.events[i].t);
    if (take_trigger) {
      const auto& tr = s.triggers[j++];
      out.push_back({0, 0, tr.t, 0,
                     tr.edge == Edge::Rising ? RecordKind::TriggerRising : RecordKind::TriggerFalling});
    } else {
      const auto& e = s.events[i++];
      out.push_back({e.x, e.y, e.t, static_cast<std::uint8_t>(e.polarity), RecordKind::Event});
    }
  }
  return out;
}

void add_record(EventStream& s, std::uint16_t x, std::uint16_t y, std::uint64_t t,
                unsigned polarity, unsigned kind) {
  switch (kind) {
    case 0:
      if (polarity > 1) throw FormatError("polarity must be 0 or 1");
      s.events.push_back({x, y, t, static_cast<Polarity>(polarity)});
      break;
    case 1: s.triggers.push_back({t, Edge::Rising}); break;
    case 2: s.triggers.push_back({t, Edge::Falling}); break;
    default: throw FormatError("unknown record kind " + std::to_string(kind));
  }
}

}  // namespace

void write_events(const fs::path& path, const EventStream& stream) {
  check_dims(stream.width, stream.height);
  const auto records = merge(stream);
  std::string out;
  out.reserve(32 + records.size() * 14);
  put_header(out, kEventMagic, stream.width, stream.height, stream.start_time, records.size());
  for (const auto& r : records) {
    put(out, r.x);
    put(out, r.y);
    put(out, r.t);
    put(out, r.polarity);
    put(out, static_cast<std::uint8_t>(r.kind));
  }
  write_text(path, out);
}

EventStream read_events(const fs::path& path) {
  Reader r(read_text(path));
  const Header h = get_header(r, kEventMagic, "event stream");
  if (r.remaining() != h.count * 14) throw FormatError("event file size does not match header");
  EventStream s;
  s.width = h.width;
  s.height = h.height;
  s.start_time = h.start;
  for (std::uint64_t i = 0; i < h.count; ++i) {
    const auto x = r.get<std::uint16_t>();
    const auto y = r.get<std::uint16_t>();
    const auto t = r.get<std::uint64_t>();
    const auto pol = r.get<std::uint8_t>();
    const auto kind = r.get<std::uint8_t>();
    add_record(s, x, y, t, pol, kind);
  }
  return s;
}

void write_events_csv(const fs::path& path, const EventStream& stream) {
  std::ostringstream os;
  os << "x,y,t,polarity,kind\n";
  os << "# width=" << stream.width << " height=" << stream.height
     << " start_time=" << stream.start_time << "\n";
  for (const auto& r : merge(stream)) {
    os << r.x << ',' << r.y << ',' << r.t << ',' << unsigned(r.polarity) << ','
       << unsigned(r.kind) << '\n';
  }
  write_text(path, os.str());
}

EventStream read_events_csv(const fs::path& path) {
  EventStream s;
  for (const auto& line : csv_lines(path, "x,y,t,polarity,kind")) {
    if (line[0] == '#') {
      unsigned long long start = 0;
      if (std::sscanf(line.c_str(), "# width=%d height=%d start_time=%llu", &s.width, &s.height,
                      &start) != 3) {
        throw FormatError("malformed CSV metadata line");
      }
      s.start_time = start;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 5) throw FormatError("CSV row needs 5 fields: " + line);
    add_record(s, parse_num<std::uint16_t>(f[0]), parse_num<std::uint16_t>(f[1]),
               parse_num<std::uint64_t>(f[2]), parse_num<unsigned>(f[3]),
               parse_num<unsigned>(f[4]));
  }
  return s;
}

// ---- tagged events ----

void write_tagged(const fs::path& path, const TaggedFile& file) {
  check_dims(file.width, file.height);
  std::string out;
  out.reserve(32 + file.events.size() * 23);
  put_header(out, kTaggedMagic, file.width, file.height, file.start_time, file.events.size());
  for (const auto& e : file.events) {
    put(out, e.x);
    put(out, e.y);
    put(out, e.t);
    put_f32(out, e.depth);
    put(out, static_cast<std::uint8_t>(e.channel));
    put_f32(out, e.disparity);
    put(out, e.column);
  }
  write_text(path, out);
}

TaggedFile read_tagged(const fs::path& path) {
  Reader r(read_text(path));
  const Header h = get_header(r, kTaggedMagic, "tagged event");
  if (r.remaining() != h.count * 23) throw FormatError("tagged file size does not match header");
  TaggedFile f;
  f.width = h.width;
  f.height = h.height;
  f.start_time = h.start;
  f.events.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    TaggedEvent e;
    e.x = r.get<std::uint16_t>();
    e.y = r.get<std::uint16_t>();
    e.t = r.get<std::uint64_t>();
    e.depth = r.get_f32();
    const auto ch = r.get<std::uint8_t>();
    if (ch > 3) throw FormatError("channel must lie in [0, 3]");
    e.channel = static_cast<Channel>(ch);
    e.disparity = r.get_f32();
    e.column = r.get<std::uint16_t>();
    f.events.push_back(e);
  }
  return f;
}

void write_tagged_csv(const fs::path& path, const TaggedFile& file) {
  std::ostringstream os;
  os << "x,y,t,depth_mm,channel,disparity,column\n";
  os << "# width=" << file.width << " height=" << file.height
     << " start_time=" << file.start_time << "\n";
  os << std::setprecision(9);
  for (const auto& e : file.events) {
    os << e.x << ',' << e.y << ',' << e.t << ',' << e.depth << ',' << unsigned(e.channel) << ','
       << e.disparity << ',' << e.column << '\n';
  }
  write_text(path, os.str());
}

TaggedFile read_tagged_csv(const fs::path& path) {
  TaggedFile f;
  for (const auto& line : csv_lines(path, "x,y,t,depth_mm,channel,disparity,column")) {
    if (line[0] == '#') {
      unsigned long long start = 0;
      if (std::sscanf(line.c_str(), "# width=%d height=%d start_time=%llu", &f.width, &f.height,
                      &start) != 3) {
        throw FormatError("malformed CSV metadata line");
      }
      f.start_time = start;
      continue;
    }
    const auto c = split(line, ',');
    if (c.size() != 7) throw FormatError("CSV row needs 7 fields: " + line);
    TaggedEvent e;
    e.x = parse_num<std::uint16_t>(c[0]);
    e.y = parse_num<std::uint16_t>(c[1]);
    e.t = parse_num<std::uint64_t>(c[2]);
    e.depth = parse_num<float>(c[3]);
    const auto ch = parse_num<unsigned>(c[4]);
    if (ch > 3) throw FormatError("channel must lie in [0, 3]");
    e.channel = static_cast<Channel>(ch);
    e.disparity = parse_num<float>(c[5]);
    e.column = parse_num<std::uint16_t>(c[6]);
    f.events.push_back(e);
  }
  return f;
}

// ---- images ----

void write_depth_png(const fs::path& path, const DepthFrame& frame) {
  check_dims(frame.width, frame.height);
  PngImage img{frame.width, frame.height, 16, PNG_COLOR_TYPE_GRAY, {}, 0, {}};
  img.row_bytes = static_cast<std::size_t>(frame.width) * 2;
  img.data.resize(img.row_bytes * static_cast<std::size_t>(frame.height));
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(std::clamp(std::lround(frame.depth[i]), 0L, 65535L));
    img.data[2 * i] = static_cast<std::uint8_t>(v >> 8);
    img.data[2 * i + 1] = static_cast<std::uint8_t>(v & 0xFF);
  }
  write_png(path, img);
}

DepthFrame read_depth_png(const fs::path& path) {
  const auto img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_GRAY || img.bit_depth != 16) {
    throw FormatError(path.string() + " is not a 16-bit grayscale depth image");
  }
  DepthFrame f(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const auto* row = img.data.data() + static_cast<std::size_t>(y) * img.row_bytes;
    for (int x = 0; x < img.width; ++x) {
      f.at(x, y) = static_cast<double>((row[2 * x] << 8) | row[2 * x + 1]);
    }
  }
  return f;
}

void write_color_png(const fs::path& path, const ColorFrame& frame) {
  check_dims(frame.width, frame.height);
  PngImage img{frame.width, frame.height, 8, PNG_COLOR_TYPE_RGB, {}, 0, {}};
  img.row_bytes = static_cast<std::size_t>(frame.width) * 3;
  img.data.resize(img.row_bytes * static_cast<std::size_t>(frame.height));
  for (std::size_t i = 0; i < frame.rgb.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) img.data[3 * i + c] = frame.mask[i] ? frame.rgb[i][c] : 0;
  }
  write_png(path, img);
}

ColorFrame read_color_png(const fs::path& path) {
  const auto img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_RGB || img.bit_depth != 8) {
    throw FormatError(path.string() + " is not an 8-bit RGB image");
  }
  ColorFrame f(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const auto* row = img.data.data() + static_cast<std::size_t>(y) * img.row_bytes;
    for (int x = 0; x < img.width; ++x) {
      const auto i = f.index(x, y);
      f.rgb[i] = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
      f.mask[i] = (f.rgb[i][0] | f.rgb[i][1] | f.rgb[i][2]) != 0;
    }
  }
  return f;
}

void write_temporal_png(const fs::path& path, const TemporalMap& map, int max_index) {
  check_dims(map.width, map.height);
  if (max_index < 1 || max_index > 255) throw FormatError("temporal index must lie in [1, 255]");
  PngImage img{map.width, map.height, 8, PNG_COLOR_TYPE_PALETTE, {}, 0, {}};
  img.palette.push_back({0, 0, 0});
  for (int m = 1; m <= max_index; ++m) {
    const auto c = jet(max_index > 1 ? double(m - 1) / (max_index - 1) : 0.5);
    img.palette.push_back({c[0], c[1], c[2]});
  }
  img.row_bytes = static_cast<std::size_t>(map.width);
  img.data.resize(map.index.size());
  for (std::size_t i = 0; i < map.index.size(); ++i) {
    if (map.index[i] > max_index) throw FormatError("temporal index exceeds the palette");
    img.data[i] = static_cast<std::uint8_t>(map.index[i]);
  }
  write_png(path, img);
}

TemporalMap read_temporal_png(const fs::path& path) {
  const auto img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_PALETTE || img.bit_depth != 8) {
    throw FormatError(path.string() + " is not an 8-bit indexed image");
  }
  TemporalMap map(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      map.index[static_cast<std::size_t>(y) * img.width + x] =
          img.data[static_cast<std::size_t>(y) * img.row_bytes + x];
    }
  }
  return map;
}

void write_pattern_png(const fs::path& path, const PatternImage& pattern) {
  check_dims(pattern.width(), pattern.height());
  PngImage img{pattern.width(), pattern.height(), 1, PNG_COLOR_TYPE_GRAY, {}, 0, {}};
  img.row_bytes = (static_cast<std::size_t>(pattern.width()) + 7) / 8;
  img.data.assign(img.row_bytes * static_cast<std::size_t>(pattern.height()), 0);
  for (int y = 0; y < pattern.height(); ++y) {
    for (int x = 0; x < pattern.width(); ++x) {
      if (pattern.at(x, y)) {
        img.data[static_cast<std::size_t>(y) * img.row_bytes + x / 8] |=
            static_cast<std::uint8_t>(0x80 >> (x % 8));
      }
    }
  }
  write_png(path, img);
}

PatternImage read_pattern_png(const fs::path& path) {
  const auto img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_GRAY || img.bit_depth != 1) {
    throw FormatError(path.string() + " is not a 1-bit pattern image");
  }
  PatternImage p(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.data[static_cast<std::size_t>(y) * img.row_bytes + x]) p.set(x, y);
    }
  }
  return p;
}

// ---- point clouds ----

void write_ply(const fs::path& path, const PointCloud& cloud) {
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
     << "\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  os << std::setprecision(9);
  for (const auto& p : cloud.points) {
    os << p.x << ' ' << p.y << ' ' << p.z << ' ' << unsigned(p.color[0]) << ' '
       << unsigned(p.color[1]) << ' ' << unsigned(p.color[2]) << '\n';
  }
  write_text(path, os.str());
}

PointCloud read_ply(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t count = 0;
  if (!std::getline(in, line) || line != "ply") throw FormatError("not a PLY file");
  bool ascii = false;
  while (std::getline(in, line) && line != "end_header") {
    if (line == "format ascii 1.0") ascii = true;
    std::sscanf(line.c_str(), "element vertex %zu", &count);
  }
  if (!ascii) throw FormatError("only ASCII PLY is supported");
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ColoredPoint p;
    unsigned r = 0, g = 0, b = 0;
    if (!(in >> p.x >> p.y >> p.z >> r >> g >> b) || r > 255 || g > 255 || b > 255) {
      throw FormatError("malformed PLY vertex " + std::to_string(i));
    }
    p.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
               static_cast<std::uint8_t>(b)};
    cloud.points.push_back(p);
  }
  return cloud;
}

// ---- calibration ----

CalibrationBundle parse_calibration(const std::string& json_text) {
  CalibrationBundle c;
  try {
    const auto j = json::parse(json_text);
    c.camera = parse_intrinsics(j.at("camera"));
    const auto& p = j.at("projector");
    c.projector.intrinsics = parse_intrinsics(p);
    c.projector.native_width = p.value("native_width", c.projector.intrinsics.width);
    c.projector.native_height = p.value("native_height", c.projector.intrinsics.height);
    c.projector.diamond_layout = p.at("diamond").get<bool>();
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const auto tr = j.at("translation_mm").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3) {
      throw FormatError("calibration: rotation needs 9 values and translation_mm 3");
    }
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c.extrinsics.rotation(r, k) = rot[static_cast<std::size_t>(3 * r + k)];
    }
    c.extrinsics.translation = {tr[0], tr[1], tr[2]};
  } catch (const json::exception& e) {
    throw FormatError(std::string("calibration: ") + e.what());
  }
  c.camera.validate();
  c.projector.validate();
  c.extrinsics.validate();
  return c;
}

CalibrationBundle load_calibration(const fs::path& path) { return parse_calibration(read_text(path)); }

std::string calibration_to_json(const CalibrationBundle& c) {
  json j;
  j["camera"] = intrinsics_json(c.camera);
  auto p = intrinsics_json(c.projector.intrinsics);
  p["diamond"] = c.projector.diamond_layout;
  p["native_width"] = c.projector.native_width;
  p["native_height"] = c.projector.native_height;
  j["projector"] = p;
  std::vector<double> rot;
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) rot.push_back(c.extrinsics.rotation(r, k));
  }
  j["rotation"] = rot;
  j["translation_mm"] = {c.extrinsics.translation.x(), c.extrinsics.translation.y(),
                         c.extrinsics.translation.z()};
  return j.dump(2);
}

}  // namespace evsl::io
