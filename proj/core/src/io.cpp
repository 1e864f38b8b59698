#include "vpcnet/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "binary interchange assumes a little-endian host");

namespace vpcnet {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ParseError::ParseError(std::string path, std::size_t byte_offset,
                       const std::string& why)
    : std::runtime_error(path + ": parse error at byte " +
                         std::to_string(byte_offset) + ": " + why),
      path_(std::move(path)),
      byte_offset_(byte_offset) {}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("read failed on " + path);
  return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw std::runtime_error("write failed on " + path);
}

namespace {

struct Cursor {
  const std::string& buf;
  const std::string& path;
  std::size_t pos = 0;

  bool eof() const { return pos >= buf.size(); }

  [[noreturn]] void fail(std::size_t at, const std::string& why) const {
    throw ParseError(path, at, why);
  }

  // Line without the terminator; handles \n and \r\n.
  std::string_view next_line() {
    if (eof()) fail(pos, "unexpected end of file");
    const std::size_t start = pos;
    std::size_t end = buf.find('\n', start);
    if (end == std::string::npos) {
      pos = buf.size();
      end = buf.size();
    } else {
      pos = end + 1;
    }
    std::size_t len = end - start;
    if (len > 0 && buf[start + len - 1] == '\r') --len;
    return std::string_view(buf).substr(start, len);
  }

  // Whitespace-delimited token for ASCII payloads.
  std::string_view next_token() {
    while (!eof() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (eof()) fail(pos, "unexpected end of file");
    const std::size_t start = pos;
    while (!eof() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    return std::string_view(buf).substr(start, pos - start);
  }

  const char* take(std::size_t bytes) {
    if (buf.size() - pos < bytes)
      fail(buf.size(), "unexpected end of file (need " +
                           std::to_string(bytes) + " more bytes)");
    const char* p = buf.data() + pos;
    pos += bytes;
    return p;
  }
};

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() &&
           std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double_token(Cursor& c, std::size_t at, std::string_view token) {
  double v;
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    c.fail(at, "expected a number, got '" + std::string(token) + "'");
  return v;
}

long long parse_int_token(Cursor& c, std::size_t at, std::string_view token) {
  long long v;
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    c.fail(at, "expected an integer, got '" + std::string(token) + "'");
  return v;
}

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

std::optional<PlyType> ply_type_from(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::kI8;
  if (name == "uchar" || name == "uint8") return PlyType::kU8;
  if (name == "short" || name == "int16") return PlyType::kI16;
  if (name == "ushort" || name == "uint16") return PlyType::kU16;
  if (name == "int" || name == "int32") return PlyType::kI32;
  if (name == "uint" || name == "uint32") return PlyType::kU32;
  if (name == "float" || name == "float32") return PlyType::kF32;
  if (name == "double" || name == "float64") return PlyType::kF64;
  return std::nullopt;
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kI8:
    case PlyType::kU8:
      return 1;
    case PlyType::kI16:
    case PlyType::kU16:
      return 2;
    case PlyType::kI32:
    case PlyType::kU32:
    case PlyType::kF32:
      return 4;
    case PlyType::kF64:
      return 8;
  }
  return 0;
}

template <typename T>
double load_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double read_scalar_binary(Cursor& c, PlyType t) {
  const char* p = c.take(ply_type_size(t));
  switch (t) {
    case PlyType::kI8:
      return load_as<std::int8_t>(p);
    case PlyType::kU8:
      return load_as<std::uint8_t>(p);
    case PlyType::kI16:
      return load_as<std::int16_t>(p);
    case PlyType::kU16:
      return load_as<std::uint16_t>(p);
    case PlyType::kI32:
      return load_as<std::int32_t>(p);
    case PlyType::kU32:
      return load_as<std::uint32_t>(p);
    case PlyType::kF32:
      return load_as<float>(p);
    case PlyType::kF64:
      return load_as<double>(p);
  }
  return 0.0;
}

double read_scalar(Cursor& c, PlyType t, bool binary) {
  if (binary) return read_scalar_binary(c, t);
  const std::size_t at = c.pos;
  const auto token = c.next_token();
  switch (t) {
    case PlyType::kF32:
    case PlyType::kF64:
      return parse_double_token(c, at, token);
    default:
      return static_cast<double>(parse_int_token(c, at, token));
  }
}

struct PlyProperty {
  bool is_list = false;
  PlyType count_type = PlyType::kU8;
  PlyType value_type = PlyType::kF32;
  std::string name;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
  std::size_t header_offset = 0;
};

struct PlyFile {
  bool binary = false;
  std::vector<PlyElement> elements;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

// Shared header+payload walk; faces are collected when present so both the
// cloud and mesh readers validate the full file.
PlyFile parse_ply(const std::string& path) {
  const std::string data = read_file(path);
  Cursor c{data, path};

  {
    const std::size_t at = c.pos;
    if (c.next_line() != "ply") c.fail(at, "missing 'ply' magic");
  }

  PlyFile file;
  bool have_format = false;
  bool header_done = false;
  while (!header_done) {
    const std::size_t at = c.pos;
    const auto tokens = split_tokens(c.next_line());
    if (tokens.empty()) continue;
    const auto& kw = tokens[0];
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (tokens.size() != 3 || tokens[2] != "1.0")
        c.fail(at, "malformed format line");
      if (tokens[1] == "binary_little_endian")
        file.binary = true;
      else if (tokens[1] == "ascii")
        file.binary = false;
      else
        c.fail(at, "unsupported format '" + std::string(tokens[1]) + "'");
      have_format = true;
    } else if (kw == "element") {
      if (tokens.size() != 3) c.fail(at, "malformed element line");
      PlyElement elem;
      elem.name = std::string(tokens[1]);
      elem.count = static_cast<std::size_t>(parse_int_token(c, at, tokens[2]));
      elem.header_offset = at;
      if (elem.name != "vertex" && elem.name != "face")
        c.fail(at, "unsupported element '" + elem.name + "'");
      file.elements.push_back(std::move(elem));
    } else if (kw == "property") {
      if (file.elements.empty())
        c.fail(at, "property before any element");
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        prop.is_list = true;
        const auto ct = ply_type_from(tokens[2]);
        const auto vt = ply_type_from(tokens[3]);
        if (!ct || !vt) c.fail(at, "unknown property type");
        prop.count_type = *ct;
        prop.value_type = *vt;
        prop.name = std::string(tokens[4]);
      } else if (tokens.size() == 3) {
        const auto vt = ply_type_from(tokens[1]);
        if (!vt) c.fail(at, "unknown property type");
        prop.value_type = *vt;
        prop.name = std::string(tokens[2]);
      } else {
        c.fail(at, "malformed property line");
      }
      file.elements.back().props.push_back(std::move(prop));
    } else if (kw == "end_header") {
      header_done = true;
    } else {
      c.fail(at, "unknown header keyword '" + std::string(kw) + "'");
    }
  }
  if (!have_format) c.fail(c.pos, "missing format line");

  for (const PlyElement& elem : file.elements) {
    if (elem.name == "vertex") {
      int coord_props = 0;
      for (const PlyProperty& p : elem.props) {
        if (p.name != "x" && p.name != "y" && p.name != "z") continue;
        if (p.is_list ||
            (p.value_type != PlyType::kF32 && p.value_type != PlyType::kF64))
          c.fail(elem.header_offset,
                 "vertex coordinate '" + p.name + "' must be float or double");
        ++coord_props;
      }
      if (coord_props != 3)
        c.fail(elem.header_offset, "vertex element needs x, y and z");
    }
  }

  for (const PlyElement& elem : file.elements) {
    if (elem.name == "vertex") {
      file.vertices.reserve(elem.count);
      for (std::size_t i = 0; i < elem.count; ++i) {
        Vec3 v;
        for (const PlyProperty& p : elem.props) {
          if (p.is_list) {
            const std::size_t n = static_cast<std::size_t>(
                read_scalar(c, p.count_type, file.binary));
            for (std::size_t k = 0; k < n; ++k)
              read_scalar(c, p.value_type, file.binary);
            continue;
          }
          const double value = read_scalar(c, p.value_type, file.binary);
          if (p.name == "x")
            v.x = value;
          else if (p.name == "y")
            v.y = value;
          else if (p.name == "z")
            v.z = value;
        }
        file.vertices.push_back(v);
      }
    } else {
      for (std::size_t i = 0; i < elem.count; ++i) {
        for (const PlyProperty& p : elem.props) {
          const bool is_face_list =
              p.is_list &&
              (p.name == "vertex_indices" || p.name == "vertex_index");
          if (!p.is_list) {
            read_scalar(c, p.value_type, file.binary);
            continue;
          }
          const std::size_t at = c.pos;
          const std::size_t n = static_cast<std::size_t>(
              read_scalar(c, p.count_type, file.binary));
          std::vector<long long> idx;
          idx.reserve(n);
          for (std::size_t k = 0; k < n; ++k)
            idx.push_back(static_cast<long long>(
                read_scalar(c, p.value_type, file.binary)));
          if (!is_face_list) continue;
          if (n < 3) c.fail(at, "face with fewer than 3 vertices");
          for (long long v : idx)
            if (v < 0 ||
                v >= static_cast<long long>(file.vertices.size()))
              c.fail(at, "face index " + std::to_string(v) +
                             " out of range");
          for (std::size_t k = 1; k + 1 < n; ++k)
            file.faces.push_back({static_cast<std::uint32_t>(idx[0]),
                                  static_cast<std::uint32_t>(idx[k]),
                                  static_cast<std::uint32_t>(idx[k + 1])});
        }
      }
    }
  }
  return file;
}

}  // namespace

PointCloud read_ply_cloud(const std::string& path) {
  PlyFile file = parse_ply(path);
  PointCloud cloud;
  cloud.points = std::move(file.vertices);
  return cloud;
}

TriangleMesh read_ply_mesh(const std::string& path) {
  PlyFile file = parse_ply(path);
  if (file.faces.empty())
    throw std::runtime_error(path + ": mesh PLY has no faces");
  return TriangleMesh::create(std::move(file.vertices), std::move(file.faces));
}

void write_ply(const std::string& path, const PointCloud& cloud) {
  std::string out;
  out += "ply\n";
  out += "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.size() * 12);
  for (const Vec3& p : cloud.points) {
    const float xyz[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                          static_cast<float>(p.z)};
    out.append(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  write_file(path, out);
}

PointCloud read_xyz_cloud(const std::string& path) {
  const std::string data = read_file(path);
  Cursor c{data, path};
  PointCloud cloud;
  while (!c.eof()) {
    const std::size_t at = c.pos;
    const auto line = c.next_line();
    const auto tokens = split_tokens(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() != 3)
      c.fail(at, "expected 3 coordinates per line, got " +
                     std::to_string(tokens.size()));
    cloud.points.push_back({parse_double_token(c, at, tokens[0]),
                            parse_double_token(c, at, tokens[1]),
                            parse_double_token(c, at, tokens[2])});
  }
  return cloud;
}

void write_xyz(const std::string& path, const PointCloud& cloud) {
  std::string out;
  for (const Vec3& p : cloud.points) {
    out += format_double(p.x);
    out += ' ';
    out += format_double(p.y);
    out += ' ';
    out += format_double(p.z);
    out += '\n';
  }
  write_file(path, out);
}

TriangleMesh read_obj_mesh(const std::string& path) {
  const std::string data = read_file(path);
  Cursor c{data, path};
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  while (!c.eof()) {
    const std::size_t at = c.pos;
    const auto tokens = split_tokens(c.next_line());
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) c.fail(at, "vertex line needs 3 coordinates");
      vertices.push_back({parse_double_token(c, at, tokens[1]),
                          parse_double_token(c, at, tokens[2]),
                          parse_double_token(c, at, tokens[3])});
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) c.fail(at, "face with fewer than 3 vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        // "3", "3/1", "3//2" and "3/1/2" forms; only the vertex index is used
        auto token = tokens[i];
        const auto slash = token.find('/');
        if (slash != std::string_view::npos) token = token.substr(0, slash);
        long long v = parse_int_token(c, at, token);
        if (v < 0) v += static_cast<long long>(vertices.size()) + 1;
        if (v < 1 || v > static_cast<long long>(vertices.size()))
          c.fail(at, "face index " + std::string(tokens[i]) + " out of range");
        idx.push_back(static_cast<std::uint32_t>(v - 1));
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k)
        faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  if (faces.empty()) throw std::runtime_error(path + ": OBJ has no faces");
  return TriangleMesh::create(std::move(vertices), std::move(faces));
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::string out;
  for (const Vec3& v : mesh.vertices()) {
    out += "v ";
    out += format_double(v.x);
    out += ' ';
    out += format_double(v.y);
    out += ' ';
    out += format_double(v.z);
    out += '\n';
  }
  for (const auto& t : mesh.triangles()) {
    out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) +
           ' ' + std::to_string(t[2] + 1) + '\n';
  }
  write_file(path, out);
}

namespace {

std::string lower_ext(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot);
  for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
  return ext;
}

}  // namespace

PointCloud read_point_cloud(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ply") return read_ply_cloud(path);
  if (ext == ".xyz") return read_xyz_cloud(path);
  throw std::runtime_error(path + ": unsupported point cloud format '" + ext +
                           "'");
}

TriangleMesh read_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".obj") return read_obj_mesh(path);
  if (ext == ".ply") return read_ply_mesh(path);
  throw std::runtime_error(path + ": unsupported mesh format '" + ext + "'");
}

std::string sha1_blob_hex(const std::string& bytes) {
  const std::string prefix = "blob " + std::to_string(bytes.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string sha1_file_hex(const std::string& path) {
  return sha1_blob_hex(read_file(path));
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct ConfigSetter {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

bool parse_bool_value(const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::size_t parse_size_value(const std::string& v) {
  std::size_t consumed = 0;
  unsigned long long out;
  try {
    out = std::stoull(v, &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a non-negative integer, got '" + v +
                                "'");
  }
  if (consumed != v.size() || v[0] == '-')
    throw std::invalid_argument("expected a non-negative integer, got '" + v +
                                "'");
  return static_cast<std::size_t>(out);
}

double parse_double_value(const std::string& v) {
  std::size_t consumed = 0;
  double out;
  try {
    out = std::stod(v, &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  if (consumed != v.size())
    throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

#define VPCNET_SIZE_KEY(field)                                        \
  {                                                                   \
    #field, {                                                         \
      [](RunConfig& c, const std::string& v) {                        \
        c.field = parse_size_value(v);                                \
      },                                                              \
          [](const RunConfig& c) { return std::to_string(c.field); }  \
    }                                                                 \
  }

#define VPCNET_BOOL_KEY(field)                                          \
  {                                                                     \
    #field, {                                                           \
      [](RunConfig& c, const std::string& v) {                          \
        c.field = parse_bool_value(v);                                  \
      },                                                                \
          [](const RunConfig& c) {                                      \
            return std::string(c.field ? "true" : "false");             \
          }                                                             \
    }                                                                   \
  }

#define VPCNET_DOUBLE_KEY(field)                                     \
  {                                                                  \
    #field, {                                                        \
      [](RunConfig& c, const std::string& v) {                       \
        c.field = parse_double_value(v);                             \
      },                                                             \
          [](const RunConfig& c) { return format_double(c.field); }  \
    }                                                                \
  }

#define VPCNET_STRING_KEY(field)                                  \
  {                                                               \
    #field, {                                                     \
      [](RunConfig& c, const std::string& v) { c.field = v; },    \
          [](const RunConfig& c) { return c.field; }              \
    }                                                             \
  }

// Echo order is this listing's order.
const std::vector<std::pair<std::string, ConfigSetter>>& config_keys() {
  static const std::vector<std::pair<std::string, ConfigSetter>> keys = {
      VPCNET_SIZE_KEY(n),
      VPCNET_SIZE_KEY(r),
      VPCNET_DOUBLE_KEY(grid_extent),
      VPCNET_BOOL_KEY(stn),
      VPCNET_BOOL_KEY(pfe),
      VPCNET_BOOL_KEY(refiner),
      VPCNET_BOOL_KEY(refiner_fps),
      VPCNET_BOOL_KEY(batchnorm),
      VPCNET_SIZE_KEY(steps),
      VPCNET_DOUBLE_KEY(lr0),
      VPCNET_DOUBLE_KEY(lr_decay),
      VPCNET_SIZE_KEY(decay_steps),
      VPCNET_SIZE_KEY(ramp_steps),
      VPCNET_DOUBLE_KEY(grad_clip),
      VPCNET_SIZE_KEY(checkpoint_every),
      VPCNET_SIZE_KEY(n_gt),
      VPCNET_SIZE_KEY(views),
      VPCNET_SIZE_KEY(image_width),
      VPCNET_SIZE_KEY(image_height),
      VPCNET_DOUBLE_KEY(focal_px),
      VPCNET_SIZE_KEY(seed),
      VPCNET_STRING_KEY(data_dir),
      VPCNET_STRING_KEY(out_dir),
  };
  return keys;
}

#undef VPCNET_SIZE_KEY
#undef VPCNET_BOOL_KEY
#undef VPCNET_DOUBLE_KEY
#undef VPCNET_STRING_KEY

}  // namespace

RunConfig RunConfig::parse(const std::string& text,
                           const std::string& origin) {
  RunConfig config;
  Cursor c{text, origin};
  while (!c.eof()) {
    const std::size_t at = c.pos;
    std::string_view line = c.next_line();
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      c.fail(at, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const ConfigSetter* setter = nullptr;
    for (const auto& [name, s] : config_keys())
      if (name == key) {
        setter = &s;
        break;
      }
    if (!setter) c.fail(at, "unknown configuration key '" + key + "'");
    try {
      setter->set(config, value);
    } catch (const std::invalid_argument& e) {
      c.fail(at, std::string(e.what()) + " for key '" + key + "'");
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  return parse(read_file(path), path);
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [name, setter] : config_keys()) {
    out += name;
    out += " = ";
    out += setter.get(*this);
    out += '\n';
  }
  return out;
}

NetConfig RunConfig::net_config() const {
  NetConfig net;
  net.enable_stn = stn;
  net.enable_pfe = pfe;
  net.enable_refiner = refiner;
  net.refiner_fps = refiner_fps;
  net.use_batchnorm = batchnorm;
  net.coarse_size = n;
  net.upsample_ratio = r;
  net.grid_extent = grid_extent;
  return net;
}

ScheduleConfig RunConfig::schedule_config() const {
  ScheduleConfig schedule;
  schedule.lr0 = lr0;
  schedule.lr_decay = lr_decay;
  // Half-run ramp and decay horizons, the reference schedule's proportion.
  schedule.decay_steps = decay_steps > 0 ? decay_steps
                                         : std::max<std::size_t>(steps / 2, 1);
  schedule.ramp_steps =
      ramp_steps > 0 ? ramp_steps : std::max<std::size_t>(steps / 2, 1);
  return schedule;
}

DatagenConfig RunConfig::datagen_config() const {
  DatagenConfig gen;
  gen.complete_points = n_gt;
  gen.views = views;
  gen.intrinsics.width = image_width;
  gen.intrinsics.height = image_height;
  gen.intrinsics.focal_px = focal_px;
  return gen;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig train;
  train.net = net_config();
  train.schedule = schedule_config();
  train.steps = steps;
  train.seed = seed;
  train.checkpoint_every = checkpoint_every;
  train.grad_clip = grad_clip;
  train.out_dir = out_dir;
  return train;
}

}  // namespace vpcnet
