#include <bit>
#include <cstring>
#include <fstream>

#include <png.h>

#include "hypertrace/engine.hpp"

namespace hypertrace {

static_assert(std::endian::native == std::endian::little, "WFLD I/O assumes a little-endian host");

namespace {

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path);
}

void png_append(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void png_flush(png_structp) {}

template <class T>
void put(std::string& s, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  s.append(b, sizeof(T));
}

template <class T>
T get(const std::string& s, std::size_t& pos) {
  if (pos + sizeof(T) > s.size()) throw InputError("WFLD: truncated data");
  T v;
  std::memcpy(&v, s.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string encode_png(const RGBImage& img) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r)
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(r) * img.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::string& path, const RGBImage& img) { write_file(path, encode_png(img)); }

void write_ppm(const std::string& path, const RGBImage& img) {
  std::string s = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  s.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  write_file(path, s);
}

std::string encode_wfld(const WeightField& f) {
  std::string s;
  s.reserve(32 + f.samples.size() * 8);
  s.append("WFLD", 4);
  put<std::uint32_t>(s, 1);
  put<std::uint32_t>(s, f.width);
  put<std::uint32_t>(s, f.height);
  put<std::uint32_t>(s, f.k);
  put<std::uint32_t>(s, static_cast<std::uint32_t>(f.precision));
  put<std::uint64_t>(s, 0);
  for (const auto& smp : f.samples) put<double>(s, smp.weight);
  return s;
}

// Termination tags and distances are not part of the dump; decoded samples
// carry the default tag.
WeightField decode_wfld(const std::string& bytes) {
  if (bytes.size() < 32 || bytes.compare(0, 4, "WFLD") != 0) throw InputError("WFLD: bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != 1) throw InputError("WFLD: unsupported version " + std::to_string(version));
  WeightField f;
  f.width = static_cast<int>(get<std::uint32_t>(bytes, pos));
  f.height = static_cast<int>(get<std::uint32_t>(bytes, pos));
  f.k = static_cast<int>(get<std::uint32_t>(bytes, pos));
  const auto prec = get<std::uint32_t>(bytes, pos);
  if (prec > 2) throw InputError("WFLD: bad precision flag");
  f.precision = static_cast<Precision>(prec);
  pos += 8;
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height * f.k * f.k;
  if (bytes.size() != 32 + 8 * n) throw InputError("WFLD: size does not match header");
  f.samples.resize(n);
  for (auto& smp : f.samples) smp.weight = get<double>(bytes, pos);
  return f;
}

void write_wfld(const std::string& path, const WeightField& f) { write_file(path, encode_wfld(f)); }

}  // namespace hypertrace
