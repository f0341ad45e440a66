// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "../byte_io.hpp"
#include "sylva/error.hpp"
#include "sylva/lidar.hpp"

namespace sylva {

namespace {

enum class PropType { kU8, kF32, kF64 };

struct Property {
  std::string name;
  PropType type;
};

PropType parse_type(const std::string& t, const std::string& where) {
  if (t == "uchar" || t == "uint8") return PropType::kU8;
  if (t == "float" || t == "float32") return PropType::kF32;
  if (t == "double" || t == "float64") return PropType::kF64;
  throw DataError(where + "malformed header: unsupported property type '" + t + "'");
}

bool read_value(std::istream& in, PropType t, double& out) {
  using namespace byte_io;
  switch (t) {
    case PropType::kU8: {
      std::uint8_t v;
      if (!read_u8(in, v)) return false;
      out = v;
      return true;
    }
    case PropType::kF32: {
      float v;
      if (!read_f32(in, v)) return false;
      out = v;
      return true;
    }
    case PropType::kF64:
      return read_f64(in, out);
  }
  return false;
}

}  // namespace

void save_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write PLY: " + path.string());
  const bool colors = !cloud.colors.empty();
  const bool tags = !cloud.tags.empty();
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "comment sylva source=" << to_string(cloud.source) << " frame=" << cloud.frame << '\n';
  out << "element vertex " << cloud.size() << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (tags) out << "property uchar source\n";
  out << "end_header\n";
  using namespace byte_io;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) write_f64(out, cloud.points[i][a]);
    if (colors) {
      write_u8(out, cloud.colors[i].r);
      write_u8(out, cloud.colors[i].g);
      write_u8(out, cloud.colors[i].b);
    }
    if (tags) write_u8(out, static_cast<std::uint8_t>(cloud.tags[i]));
  }
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open PLY: " + path.string());
  const std::string where = path.string() + ": ";
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw DataError(where + "bad magic line (expected 'ply')");

  PointCloud cloud;
  std::vector<Property> props;
  std::size_t count = 0;
  bool saw_format = false, saw_vertex = false, in_vertex = false, saw_end = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt != "binary_little_endian" || ver != "1.0") {
        throw DataError(where + "malformed header: only binary_little_endian 1.0 is supported");
      }
      saw_format = true;
    } else if (key == "comment" || key == "obj_info") {
      std::string word;
      ls >> word;
      if (word != "sylva") continue;
      while (ls >> word) {
        if (word.rfind("source=", 0) == 0) cloud.source = source_tag_from_string(word.substr(7));
        if (word.rfind("frame=", 0) == 0) cloud.frame = word.substr(6);
      }
    } else if (key == "element") {
      std::string name;
      long long n = -1;
      ls >> name >> n;
      if (name != "vertex") throw DataError(where + "malformed header: unsupported element '" + name + "'");
      if (saw_vertex || n < 0) throw DataError(where + "malformed header: bad vertex element");
      count = std::size_t(n);
      saw_vertex = in_vertex = true;
    } else if (key == "property") {
      if (!in_vertex) throw DataError(where + "malformed header: property outside vertex element");
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw DataError(where + "malformed header: list properties are not supported");
      props.push_back({name, parse_type(type, where)});
    } else if (key == "end_header") {
      saw_end = true;
      break;
    } else {
      throw DataError(where + "malformed header: unexpected line '" + line + "'");
    }
  }
  if (!saw_end) throw DataError(where + "malformed header: missing end_header");
  if (!saw_format) throw DataError(where + "malformed header: missing format line");
  if (!saw_vertex) throw DataError(where + "malformed header: missing vertex element");

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1, is = -1;
  for (int k = 0; k < int(props.size()); ++k) {
    const auto& n = props[k].name;
    if (n == "x") ix = k;
    else if (n == "y") iy = k;
    else if (n == "z") iz = k;
    else if (n == "red") ir = k;
    else if (n == "green") ig = k;
    else if (n == "blue") ib = k;
    else if (n == "source") is = k;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw DataError(where + "malformed header: missing x/y/z properties");
  const bool colors = ir >= 0 && ig >= 0 && ib >= 0;
  cloud.points.resize(count);
  if (colors) cloud.colors.resize(count);
  if (is >= 0) cloud.tags.resize(count);
  std::vector<double> row(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < props.size(); ++k) {
      if (!read_value(in, props[k].type, row[k])) {
        throw DataError(where + "truncated payload (vertex " + std::to_string(i) + " of " + std::to_string(count) + ")");
      }
    }
    cloud.points[i] = Vec3(row[ix], row[iy], row[iz]);
    if (colors) {
      cloud.colors[i] = {std::uint8_t(row[ir]), std::uint8_t(row[ig]), std::uint8_t(row[ib])};
    }
    if (is >= 0) cloud.tags[i] = static_cast<SourceTag>(std::uint8_t(row[is]));
  }
  cloud.validate();
  return cloud;
}

}  // namespace sylva
