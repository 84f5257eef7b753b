#include "mixlab/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mixlab/error.hpp"

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

namespace mixlab {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("truncated file");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  return value;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open " + path.string() + " for writing");
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw DataError("failed writing " + path.string());
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

std::string shape_tuple(const std::vector<std::size_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) out += ",";
    if (i + 1 < shape.size()) out += " ";
  }
  return out + ")";
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (const auto s : shape) n *= s;
  return n;
}

void write_npy_raw(const std::filesystem::path& path, const char* descr, const void* data, std::size_t bytes,
                   const std::vector<std::size_t>& shape) {
  std::string header = std::string("{'descr': '") + descr + "', 'fortran_order': False, 'shape': " +
                       shape_tuple(shape) + ", }";
  // Magic (6) + version (2) + length (2) + header + newline, padded to 64.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string out("\x93NUMPY\x01\x00", 8);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
  out += header;
  out.append(static_cast<const char*>(data), bytes);
  write_bytes(path, out);
}

template <typename T>
NpyArray<T> read_npy_raw(const std::filesystem::path& path, std::string_view descr) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0) throw DataError(path.string() + ": not an npy file");
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t start = 0;
  if (major == 1) {
    header_len = get<std::uint16_t>(bytes, 8);
    start = 10;
  } else {
    header_len = get<std::uint32_t>(bytes, 8);
    start = 12;
  }
  if (start + header_len > bytes.size()) throw DataError(path.string() + ": truncated header");
  const std::string header = bytes.substr(start, header_len);
  if (header.find(std::string("'descr': '") + std::string(descr) + "'") == std::string::npos) {
    throw DataError(path.string() + ": unexpected dtype, wanted " + std::string(descr));
  }
  if (header.find("'fortran_order': False") == std::string::npos) {
    throw DataError(path.string() + ": Fortran order is not supported");
  }
  const auto open = header.find('(', header.find("'shape'"));
  const auto close = header.find(')', open);
  if (open == std::string::npos || close == std::string::npos) throw DataError(path.string() + ": bad shape");
  NpyArray<T> array;
  std::string dims = header.substr(open + 1, close - open - 1);
  std::replace(dims.begin(), dims.end(), ',', ' ');
  std::istringstream stream(dims);
  std::size_t dim = 0;
  while (stream >> dim) array.shape.push_back(dim);
  const std::size_t count = element_count(array.shape);
  const std::size_t offset = start + header_len;
  if (bytes.size() - offset != count * sizeof(T)) throw DataError(path.string() + ": payload size mismatch");
  array.data.resize(count);
  std::memcpy(array.data.data(), bytes.data() + offset, count * sizeof(T));
  return array;
}

}  // namespace

void write_wav(const std::filesystem::path& path, const MultiSignal& channels, double sample_rate) {
  if (channels.empty()) throw DataError("write_wav: no channels");
  const std::size_t frames = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != frames) throw DataError("write_wav: channels differ in length");
  }
  const auto num_channels = static_cast<std::uint16_t>(channels.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * channels.size() * sizeof(float));

  std::string out;
  out.reserve(58 + data_bytes);
  out += "RIFF";
  put<std::uint32_t>(out, 4 + 26 + 12 + 8 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put<std::uint32_t>(out, 18);
  put<std::uint16_t>(out, kFormatFloat);
  put<std::uint16_t>(out, num_channels);
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * num_channels * 4);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(num_channels * 4));
  put<std::uint16_t>(out, 32);
  put<std::uint16_t>(out, 0);
  out += "fact";
  put<std::uint32_t>(out, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frames));
  out += "data";
  put<std::uint32_t>(out, data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& c : channels) put<float>(out, static_cast<float>(c[i]));
  }
  write_bytes(path, out);
}

WavData read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw DataError(path.string() + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::size_t data_pos = 0;
  std::size_t data_len = 0;
  bool have_fmt = false;
  for (std::size_t pos = 12; pos + 8 <= bytes.size();) {
    const std::string id = bytes.substr(pos, 4);
    const std::size_t len = get<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = get<std::uint16_t>(bytes, body);
      channels = get<std::uint16_t>(bytes, body + 2);
      rate = get<std::uint32_t>(bytes, body + 4);
      bits = get<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) format = get<std::uint16_t>(bytes, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = std::min(len, bytes.size() - body);
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || data_pos == 0) throw DataError(path.string() + ": missing fmt or data chunk");
  if (channels == 0) throw DataError(path.string() + ": zero channels");
  const std::size_t width = bits / 8;
  const bool supported = (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) ||
                         (format == kFormatFloat && (bits == 32 || bits == 64));
  if (!supported) throw DataError(path.string() + ": unsupported sample format");

  const std::size_t frames = data_len / (width * channels);
  WavData wav;
  wav.sample_rate = rate;
  wav.channels.assign(channels, Signal(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_pos + (i * channels + c) * width;
      double v = 0.0;
      if (format == kFormatFloat) {
        v = bits == 32 ? static_cast<double>(get<float>(bytes, at)) : get<double>(bytes, at);
      } else if (bits == 16) {
        v = get<std::int16_t>(bytes, at) / 32768.0;
      } else if (bits == 24) {
        const auto b0 = static_cast<unsigned char>(bytes[at]);
        const auto b1 = static_cast<unsigned char>(bytes[at + 1]);
        const auto b2 = static_cast<unsigned char>(bytes[at + 2]);
        auto raw = static_cast<std::int32_t>(b0 | (b1 << 8) | (b2 << 16));
        if (raw & 0x800000) raw -= 0x1000000;
        v = raw / 8388608.0;
      } else {
        v = get<std::int32_t>(bytes, at) / 2147483648.0;
      }
      wav.channels[c][i] = v;
    }
  }
  return wav;
}

Signal resample(std::span<const double> signal, double from_rate, double to_rate) {
  if (!(from_rate > 0.0) || !(to_rate > 0.0)) throw std::invalid_argument("resample: rates must be positive");
  if (from_rate == to_rate) return {signal.begin(), signal.end()};
  const double ratio = to_rate / from_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to the input Nyquist
  constexpr int kHalfWidth = 32;
  const double half = kHalfWidth / cutoff;
  const auto out_length = static_cast<std::size_t>(std::floor(static_cast<double>(signal.size()) * ratio));
  Signal out(out_length, 0.0);
  for (std::size_t m = 0; m < out_length; ++m) {
    const double center = static_cast<double>(m) / ratio;
    const auto first = static_cast<std::ptrdiff_t>(std::ceil(center - half));
    const auto last = static_cast<std::ptrdiff_t>(std::floor(center + half));
    double acc = 0.0;
    for (std::ptrdiff_t n = std::max<std::ptrdiff_t>(first, 0);
         n <= last && n < static_cast<std::ptrdiff_t>(signal.size()); ++n) {
      const double x = static_cast<double>(n) - center;
      const double arg = cutoff * x;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * x / half);
      acc += signal[static_cast<std::size_t>(n)] * cutoff * sinc * window;
    }
    out[m] = acc;
  }
  return out;
}

void write_npy(const std::filesystem::path& path, std::span<const float> data, const std::vector<std::size_t>& shape) {
  if (element_count(shape) != data.size()) throw DataError("write_npy: shape does not match data");
  write_npy_raw(path, "<f4", data.data(), data.size_bytes(), shape);
}

void write_npy(const std::filesystem::path& path, std::span<const double> data, const std::vector<std::size_t>& shape) {
  if (element_count(shape) != data.size()) throw DataError("write_npy: shape does not match data");
  write_npy_raw(path, "<f8", data.data(), data.size_bytes(), shape);
}

void write_npy(const std::filesystem::path& path, std::span<const std::complex<double>> data,
               const std::vector<std::size_t>& shape) {
  if (element_count(shape) != data.size()) throw DataError("write_npy: shape does not match data");
  write_npy_raw(path, "<c16", data.data(), data.size_bytes(), shape);
}

NpyArray<float> read_npy_float(const std::filesystem::path& path) { return read_npy_raw<float>(path, "<f4"); }

NpyArray<double> read_npy_double(const std::filesystem::path& path) { return read_npy_raw<double>(path, "<f8"); }

NpyArray<std::complex<double>> read_npy_complex(const std::filesystem::path& path) {
  return read_npy_raw<std::complex<double>>(path, "<c16");
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto temp = path;
  temp += ".tmp";
  write_bytes(temp, text);
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw DataError("cannot move " + temp.string() + " into place");
  }
}

std::string read_text(const std::filesystem::path& path) { return read_bytes(path); }

}  // namespace mixlab
