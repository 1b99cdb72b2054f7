#include "voxseg/volume_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace voxseg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> parse_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open header file: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("malformed header line (missing '='): \"" + trim(line) + "\"");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv,
                           const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("missing required header key: " + key);
  return it->second;
}

template <typename T, int N>
std::array<T, N> parse_triple(const std::string& value, const std::string& key) {
  std::istringstream is(value);
  std::array<T, N> out{};
  for (int i = 0; i < N; ++i) {
    if (!(is >> out[i])) {
      throw FormatError("header key " + key + " needs " + std::to_string(N) +
                        " values, got \"" + value + "\"");
    }
  }
  return out;
}

template <typename T>
std::vector<double> read_raw(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open raw data file: " + path.string());
  std::vector<T> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(T)) {
    std::ostringstream os;
    os << "raw data file truncated: expected " << n * sizeof(T) << " bytes in "
       << path.string() << ", got " << in.gcount();
    throw FormatError(os.str());
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(buf[i]);
  return out;
}

template <typename T>
void write_raw(const std::filesystem::path& path, const std::vector<T>& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open raw data file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(T)));
  if (!out) throw FormatError("write failed: " + path.string());
}

std::string type_name(ElementType t) {
  switch (t) {
    case ElementType::uint8: return "MET_UCHAR";
    case ElementType::int16: return "MET_SHORT";
    case ElementType::float32: return "MET_FLOAT";
  }
  return "";
}

template <typename T>
std::vector<T> convert_integral(const Volume& v, const char* tname) {
  std::vector<T> buf(v.size());
  const double lo = static_cast<double>(std::numeric_limits<T>::min());
  const double hi = static_cast<double>(std::numeric_limits<T>::max());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double r = std::nearbyint(v[i]);
    if (!(r >= lo && r <= hi)) {
      std::ostringstream os;
      os << "value " << v[i] << " at voxel index " << i << " out of range for "
         << tname;
      throw Error(os.str());
    }
    buf[i] = static_cast<T>(r);
  }
  return buf;
}

}  // namespace

Volume read_volume(const std::filesystem::path& header_path) {
  auto kv = parse_header(header_path);

  if (require(kv, "NDims") != "3") {
    throw FormatError("NDims must be 3, got " + kv["NDims"]);
  }
  Dims dims = parse_triple<int, 3>(require(kv, "DimSize"), "DimSize");
  for (int d : dims) {
    if (d <= 0) throw FormatError("DimSize components must be positive");
  }
  Spacing spacing = parse_triple<double, 3>(require(kv, "ElementSpacing"), "ElementSpacing");
  for (double s : spacing) {
    if (!(s > 0.0)) throw FormatError("ElementSpacing components must be positive");
  }
  const std::string& byte_order = require(kv, "ElementByteOrderMSB");
  if (byte_order != "False") {
    throw FormatError("ElementByteOrderMSB must be False (little-endian), got " + byte_order);
  }
  const std::string& etype = require(kv, "ElementType");
  std::filesystem::path raw = header_path.parent_path() / require(kv, "ElementDataFile");

  const std::size_t n = voxel_count(dims);
  std::vector<double> data;
  if (etype == "MET_UCHAR") {
    data = read_raw<std::uint8_t>(raw, n);
  } else if (etype == "MET_SHORT") {
    data = read_raw<std::int16_t>(raw, n);
  } else if (etype == "MET_FLOAT") {
    data = read_raw<float>(raw, n);
  } else {
    throw FormatError("unsupported ElementType: " + etype);
  }
  return Volume(dims, spacing, std::move(data));
}

void write_volume(const Volume& v, const std::filesystem::path& header_path,
                  ElementType type) {
  std::filesystem::path raw = header_path;
  raw.replace_extension(".raw");

  switch (type) {
    case ElementType::uint8:
      write_raw(raw, convert_integral<std::uint8_t>(v, "MET_UCHAR"));
      break;
    case ElementType::int16:
      write_raw(raw, convert_integral<std::int16_t>(v, "MET_SHORT"));
      break;
    case ElementType::float32: {
      std::vector<float> buf(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) buf[i] = static_cast<float>(v[i]);
      write_raw(raw, buf);
      break;
    }
  }

  std::ofstream out(header_path);
  if (!out) throw FormatError("cannot open header file for writing: " + header_path.string());
  out << "NDims = 3\n";
  out << "DimSize = " << v.nx() << " " << v.ny() << " " << v.nz() << "\n";
  std::ostringstream sp;
  sp.precision(17);
  sp << v.spacing()[0] << " " << v.spacing()[1] << " " << v.spacing()[2];
  out << "ElementSpacing = " << sp.str() << "\n";
  out << "ElementType = " << type_name(type) << "\n";
  out << "ElementByteOrderMSB = False\n";
  out << "ElementDataFile = " << raw.filename().string() << "\n";
  if (!out) throw FormatError("write failed: " + header_path.string());
}

BinaryMask read_mask(const std::filesystem::path& header_path) {
  Volume v = read_volume(header_path);
  BinaryMask m(v.dims(), v.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) m.bits()[i] = (v[i] != 0.0) ? 1 : 0;
  return m;
}

void write_mask(const BinaryMask& m, const std::filesystem::path& header_path) {
  Volume v(m.dims(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) v[i] = m.get(i) ? 255.0 : 0.0;
  write_volume(v, header_path, ElementType::uint8);
}

}  // namespace voxseg
