#pragma once

// PLY vertex I/O. Reads ASCII and binary little-endian files with any
// scalar property layout; x, y, z are required, red/green/blue and the
// integer scalars semlabel/treeid are optional. Writes x,y,z as float and
// colors as uchar.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "orchard/cloud.hpp"
#include "orchard/error.hpp"

namespace orchard {

struct PlyData {
  ColorPointCloud cloud;
  std::optional<std::vector<int>> semlabel;
  std::optional<std::vector<int>> treeid;
};

namespace detail::ply {

enum class Type { I8, U8, I16, U16, I32, U32, F32, F64 };

inline std::optional<Type> parse_type(const std::string& s) {
  if (s == "char" || s == "int8") return Type::I8;
  if (s == "uchar" || s == "uint8") return Type::U8;
  if (s == "short" || s == "int16") return Type::I16;
  if (s == "ushort" || s == "uint16") return Type::U16;
  if (s == "int" || s == "int32") return Type::I32;
  if (s == "uint" || s == "uint32") return Type::U32;
  if (s == "float" || s == "float32") return Type::F32;
  if (s == "double" || s == "float64") return Type::F64;
  return std::nullopt;
}

inline std::size_t type_size(Type t) {
  switch (t) {
    case Type::I8: case Type::U8: return 1;
    case Type::I16: case Type::U16: return 2;
    case Type::I32: case Type::U32: case Type::F32: return 4;
    case Type::F64: return 8;
  }
  return 0;
}

template <class T>
T load_le(const unsigned char* p) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

inline double decode(Type t, const unsigned char* p) {
  switch (t) {
    case Type::I8: return load_le<std::int8_t>(p);
    case Type::U8: return load_le<std::uint8_t>(p);
    case Type::I16: return load_le<std::int16_t>(p);
    case Type::U16: return load_le<std::uint16_t>(p);
    case Type::I32: return load_le<std::int32_t>(p);
    case Type::U32: return load_le<std::uint32_t>(p);
    case Type::F32: return load_le<float>(p);
    case Type::F64: return load_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Type type = Type::F32;
  bool is_list = false;
  Type count_type = Type::U8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
};

enum class Format { Ascii, BinaryLE };

struct Header {
  Format format = Format::Ascii;
  std::vector<Element> elements;
  std::size_t lines = 0;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

inline Header read_header(std::istream& in) {
  Header h;
  std::string line;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++h.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != "ply") fail("line 1: missing 'ply' magic");
  bool have_format = false;
  while (true) {
    if (!next()) fail("line " + std::to_string(h.lines) + ": header ended before end_header");
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    const std::string where = "line " + std::to_string(h.lines) + ": ";
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string f, ver;
      ls >> f >> ver;
      if (f == "ascii") h.format = Format::Ascii;
      else if (f == "binary_little_endian") h.format = Format::BinaryLE;
      else fail(where + "unsupported format '" + f + "'");
      have_format = true;
    } else if (kw == "element") {
      Element e;
      long long n = -1;
      ls >> e.name >> n;
      if (e.name.empty() || n < 0 || ls.fail()) fail(where + "malformed element line");
      e.count = static_cast<std::size_t>(n);
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty()) fail(where + "property before any element");
      Property p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        auto c = parse_type(ct), i = parse_type(it);
        if (!c || !i || p.name.empty()) fail(where + "malformed list property");
        p.is_list = true;
        p.count_type = *c;
        p.type = *i;
      } else {
        auto ty = parse_type(t);
        ls >> p.name;
        if (!ty || p.name.empty()) fail(where + "unknown property type '" + t + "'");
        p.type = *ty;
      }
      h.elements.back().props.push_back(std::move(p));
    } else {
      fail(where + "unexpected keyword '" + kw + "'");
    }
  }
  if (!have_format) fail("header has no format line");
  return h;
}

struct VertexSlots {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1, sem = -1, tree = -1;
};

inline VertexSlots map_slots(const Element& e) {
  VertexSlots s;
  for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
    const auto& n = e.props[i].name;
    if (e.props[i].is_list) continue;
    if (n == "x") s.x = i;
    else if (n == "y") s.y = i;
    else if (n == "z") s.z = i;
    else if (n == "red" || n == "r" || n == "diffuse_red") s.r = i;
    else if (n == "green" || n == "g" || n == "diffuse_green") s.g = i;
    else if (n == "blue" || n == "b" || n == "diffuse_blue") s.b = i;
    else if (n == "semlabel") s.sem = i;
    else if (n == "treeid") s.tree = i;
  }
  if (s.x < 0 || s.y < 0 || s.z < 0) fail("vertex element lacks x/y/z");
  return s;
}

inline std::uint8_t to_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline void store_vertex(PlyData& out, const VertexSlots& s, const std::vector<double>& v) {
  const Vec3 p(v[s.x], v[s.y], v[s.z]);
  Rgb c{128, 128, 128};
  if (s.r >= 0 && s.g >= 0 && s.b >= 0) c = {to_channel(v[s.r]), to_channel(v[s.g]), to_channel(v[s.b])};
  out.cloud.push_back(p, c);
  if (s.sem >= 0) out.semlabel->push_back(static_cast<int>(v[s.sem]));
  if (s.tree >= 0) out.treeid->push_back(static_cast<int>(v[s.tree]));
}

}  // namespace detail::ply

inline PlyData read_ply(std::istream& in) {
  using namespace detail::ply;
  const Header h = read_header(in);
  PlyData out;
  bool seen_vertex = false;
  for (const auto& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    VertexSlots slots;
    if (is_vertex) {
      slots = map_slots(e);
      out.cloud.reserve(e.count);
      if (slots.sem >= 0) out.semlabel.emplace().reserve(e.count);
      if (slots.tree >= 0) out.treeid.emplace().reserve(e.count);
      seen_vertex = true;
    }
    std::vector<double> vals(e.props.size());
    if (h.format == Format::Ascii) {
      std::string line;
      std::size_t lineno = h.lines;
      for (std::size_t k = 0; k < e.count; ++k) {
        do {
          if (!std::getline(in, line)) {
            fail("line " + std::to_string(lineno + 1) + ": expected " + std::to_string(e.count) + " " + e.name +
                 " rows, got " + std::to_string(k));
          }
          ++lineno;
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        std::istringstream ls(line);
        for (std::size_t p = 0; p < e.props.size(); ++p) {
          double v = 0;
          if (e.props[p].is_list) {
            long long n = 0;
            if (!(ls >> n)) fail("line " + std::to_string(lineno) + ": malformed list count");
            for (long long j = 0; j < n; ++j)
              if (!(ls >> v)) fail("line " + std::to_string(lineno) + ": short list");
            continue;
          }
          if (!(ls >> v)) fail("line " + std::to_string(lineno) + ": expected " + std::to_string(e.props.size()) +
                               " values for " + e.name);
          vals[p] = v;
        }
        if (is_vertex) store_vertex(out, slots, vals);
      }
    } else {
      bool fixed = true;
      std::size_t stride = 0;
      for (const auto& p : e.props) {
        fixed = fixed && !p.is_list;
        stride += type_size(p.type);
      }
      if (fixed) {
        const std::size_t want = stride * e.count;
        std::vector<unsigned char> buf(want);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(want));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got != want) {
          fail("truncated binary body in element '" + e.name + "': expected " + std::to_string(want) +
               " bytes, got " + std::to_string(got));
        }
        if (is_vertex) {
          for (std::size_t k = 0; k < e.count; ++k) {
            const unsigned char* row = buf.data() + k * stride;
            std::size_t off = 0;
            for (std::size_t p = 0; p < e.props.size(); ++p) {
              vals[p] = decode(e.props[p].type, row + off);
              off += type_size(e.props[p].type);
            }
            store_vertex(out, slots, vals);
          }
        }
      } else {
        if (is_vertex) fail("list properties in the vertex element are not supported");
        // variable-length rows (faces): consume and discard
        std::array<unsigned char, 8> tmp{};
        for (std::size_t k = 0; k < e.count; ++k) {
          for (const auto& p : e.props) {
            if (p.is_list) {
              const auto cs = type_size(p.count_type);
              if (!in.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(cs))) {
                fail("truncated binary body in element '" + e.name + "'");
              }
              const auto n = static_cast<std::size_t>(decode(p.count_type, tmp.data()));
              in.ignore(static_cast<std::streamsize>(n * type_size(p.type)));
            } else {
              in.ignore(static_cast<std::streamsize>(type_size(p.type)));
            }
            if (!in) fail("truncated binary body in element '" + e.name + "'");
          }
        }
      }
    }
  }
  if (!seen_vertex) fail("file has no vertex element");
  return out;
}

inline PlyData read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_ply(in);
}

struct PlyWriteOptions {
  bool binary = true;
  const std::vector<int>* semlabel = nullptr;
  const std::vector<int>* treeid = nullptr;
};

inline void write_ply(std::ostream& out, const ColorPointCloud& cloud, const PlyWriteOptions& opt = {}) {
  const std::size_t n = cloud.size();
  if (cloud.colors.size() != n) throw Error(ErrorCode::ShapeError, "points and colors differ in length");
  if ((opt.semlabel && opt.semlabel->size() != n) || (opt.treeid && opt.treeid->size() != n)) {
    throw Error(ErrorCode::ShapeError, "per-vertex scalar length differs from vertex count");
  }
  out << "ply\nformat " << (opt.binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << n << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (opt.semlabel) out << "property int semlabel\n";
  if (opt.treeid) out << "property int treeid\n";
  out << "end_header\n";
  if (opt.binary) {
    std::vector<char> row(15 + (opt.semlabel ? 4 : 0) + (opt.treeid ? 4 : 0));
    for (std::size_t i = 0; i < n; ++i) {
      char* w = row.data();
      for (int k = 0; k < 3; ++k) {
        const float f = static_cast<float>(cloud.points[i][k]);
        std::memcpy(w, &f, 4);
        w += 4;
      }
      *w++ = static_cast<char>(cloud.colors[i].r);
      *w++ = static_cast<char>(cloud.colors[i].g);
      *w++ = static_cast<char>(cloud.colors[i].b);
      if (opt.semlabel) {
        const std::int32_t v = (*opt.semlabel)[i];
        std::memcpy(w, &v, 4);
        w += 4;
      }
      if (opt.treeid) {
        const std::int32_t v = (*opt.treeid)[i];
        std::memcpy(w, &v, 4);
      }
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  } else {
    char buf[160];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = cloud.points[i];
      const auto& c = cloud.colors[i];
      int len = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u %u %u", static_cast<float>(p.x()),
                              static_cast<float>(p.y()), static_cast<float>(p.z()), c.r, c.g, c.b);
      out.write(buf, len);
      if (opt.semlabel) out << ' ' << (*opt.semlabel)[i];
      if (opt.treeid) out << ' ' << (*opt.treeid)[i];
      out << '\n';
    }
  }
}

inline void write_ply(const std::string& path, const ColorPointCloud& cloud, const PlyWriteOptions& opt = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_ply(out, cloud, opt);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace orchard
