#include "springsim/io/ply.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace springsim::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> parse_scalar(const std::string& t) {
  if (t == "char" || t == "int8") return Scalar::Int8;
  if (t == "uchar" || t == "uint8") return Scalar::UInt8;
  if (t == "short" || t == "int16") return Scalar::Int16;
  if (t == "ushort" || t == "uint16") return Scalar::UInt16;
  if (t == "int" || t == "int32") return Scalar::Int32;
  if (t == "uint" || t == "uint32") return Scalar::UInt32;
  if (t == "float" || t == "float32") return Scalar::Float32;
  if (t == "double" || t == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

template <class T>
T read_raw(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double decode(Scalar s, const char* p) {
  switch (s) {
    case Scalar::Int8: return read_raw<std::int8_t>(p);
    case Scalar::UInt8: return read_raw<std::uint8_t>(p);
    case Scalar::Int16: return read_raw<std::int16_t>(p);
    case Scalar::UInt16: return read_raw<std::uint16_t>(p);
    case Scalar::Int32: return read_raw<std::int32_t>(p);
    case Scalar::UInt32: return read_raw<std::uint32_t>(p);
    case Scalar::Float32: return read_raw<float>(p);
    case Scalar::Float64: return read_raw<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Format { Ascii, BinaryLE };

struct Header {
  Format format = Format::BinaryLE;
  std::vector<Element> elements;
};

Header parse_header(std::istream& in, const std::string& where) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw Error(where + ": not a PLY file (missing 'ply' magic)");
  Header h;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") {
      if (!have_format) throw Error(where + ": PLY header has no format line");
      return h;
    }
    if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
    if (kw == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") h.format = Format::Ascii;
      else if (fmt == "binary_little_endian") h.format = Format::BinaryLE;
      else throw Error(where + ": unsupported PLY format '" + fmt + "'");
      have_format = true;
    } else if (kw == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) throw Error(where + ": malformed element line: " + line);
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty()) throw Error(where + ": property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        auto c = parse_scalar(ct);
        auto i = parse_scalar(it);
        if (!c || !i) throw Error(where + ": unknown list property types in: " + line);
        p.is_list = true;
        p.count_type = *c;
        p.type = *i;
      } else {
        auto t = parse_scalar(type);
        if (!t) throw Error(where + ": unknown property type '" + type + "'");
        p.type = *t;
        ls >> p.name;
      }
      if (p.name.empty()) throw Error(where + ": property without a name");
      h.elements.back().properties.push_back(p);
    } else {
      throw Error(where + ": unexpected PLY header line: " + line);
    }
  }
  throw Error(where + ": PLY header is missing end_header");
}

int find_property(const Element& e, const std::string& name) {
  for (std::size_t i = 0; i < e.properties.size(); ++i)
    if (e.properties[i].name == name && !e.properties[i].is_list) return static_cast<int>(i);
  return -1;
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(where + ": cannot open PLY file");
  const Header h = parse_header(in, where);

  const auto vertex_it = std::find_if(h.elements.begin(), h.elements.end(),
                                      [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == h.elements.end()) throw Error(where + ": PLY has no vertex element");
  const Element& vertex = *vertex_it;
  const int ix = find_property(vertex, "x");
  const int iy = find_property(vertex, "y");
  const int iz = find_property(vertex, "z");
  for (auto [idx, name] : {std::pair{ix, "x"}, std::pair{iy, "y"}, std::pair{iz, "z"}})
    if (idx < 0) throw Error(where + ": PLY vertex element is missing property '" + name + "'");
  const int ir = find_property(vertex, "red");
  const int ig = find_property(vertex, "green");
  const int ib = find_property(vertex, "blue");
  const int io = find_property(vertex, "opacity");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.positions.resize(vertex.count);
  if (has_color) cloud.colors.emplace(vertex.count);
  if (io >= 0) cloud.opacities.emplace(vertex.count);

  std::vector<double> values;
  auto store = [&](std::size_t row) {
    cloud.positions[row] = Vec3(values[ix], values[iy], values[iz]);
    if (has_color) {
      auto channel = [&](int idx) {
        const double v = values[idx];
        return vertex.properties[idx].type == Scalar::UInt8 ? v / 255.0 : v;
      };
      (*cloud.colors)[row] = Vec3(channel(ir), channel(ig), channel(ib));
    }
    if (io >= 0) (*cloud.opacities)[row] = values[io];
  };

  for (const auto& e : h.elements) {
    const bool is_vertex = &e == &vertex;
    for (std::size_t row = 0; row < e.count; ++row) {
      values.assign(e.properties.size(), 0.0);
      if (h.format == Format::Ascii) {
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const auto& prop = e.properties[p];
          double v;
          if (!(in >> v)) throw Error(where + ": truncated ASCII PLY body in element " + e.name);
          if (prop.is_list) {
            for (long long c = 0; c < static_cast<long long>(v); ++c) {
              double skip;
              if (!(in >> skip)) throw Error(where + ": truncated ASCII PLY list");
            }
          } else {
            values[p] = v;
          }
        }
      } else {
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const auto& prop = e.properties[p];
          char buf[8];
          if (prop.is_list) {
            if (!in.read(buf, static_cast<std::streamsize>(scalar_size(prop.count_type))))
              throw Error(where + ": truncated binary PLY list");
            const auto count = static_cast<std::size_t>(decode(prop.count_type, buf));
            in.ignore(static_cast<std::streamsize>(count * scalar_size(prop.type)));
            if (!in) throw Error(where + ": truncated binary PLY list");
          } else {
            if (!in.read(buf, static_cast<std::streamsize>(scalar_size(prop.type))))
              throw Error(where + ": truncated binary PLY body in element " + e.name);
            values[p] = decode(prop.type, buf);
          }
        }
      }
      if (is_vertex) store(row);
    }
    if (is_vertex) break;
  }

  for (std::size_t i = 0; i < cloud.positions.size(); ++i)
    if (!all_finite(cloud.positions[i]))
      throw Error(where + ": vertex " + std::to_string(i) + " has a non-finite coordinate");
  if (cloud.positions.empty()) throw Error(where + ": PLY has no vertices");
  return cloud;
}

void save_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  const bool has_color = cloud.colors.has_value();
  const bool has_opacity = cloud.opacities.has_value();
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (has_color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (has_opacity) out << "property float opacity\n";
  out << "end_header\n";
  auto put_f32 = [&out](double v) {
    const auto f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    put_f32(p.x());
    put_f32(p.y());
    put_f32(p.z());
    if (has_color) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp((*cloud.colors)[i][c], 0.0, 1.0);
        const auto byte = static_cast<std::uint8_t>(std::nearbyint(v * 255.0));
        out.put(static_cast<char>(byte));
      }
    }
    if (has_opacity) put_f32((*cloud.opacities)[i]);
  }
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace springsim::io
