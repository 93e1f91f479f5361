#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace plateau {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Uniform voxel grid; 2D grids keep shape[2] = 1. Voxel (i,j,k) has its center at
// origin + h * (i,j,k); row-major index (i*ny + j)*nz + k.
struct Grid {
  int dim = 2;
  std::array<int, 3> shape{8, 8, 1};
  double h = 1.0;
  Vec3 origin{0.0, 0.0, 0.0};

  Grid() = default;
  Grid(int dim_, std::array<int, 3> shape_, double h_, Vec3 origin_ = {0, 0, 0})
      : dim(dim_), shape(shape_), h(h_), origin(origin_) {
    if (dim == 2) shape[2] = 1;
    validate();
  }

  static Grid make2d(int nx, int ny, double h, double ox = 0.0, double oy = 0.0) {
    return Grid(2, {nx, ny, 1}, h, {ox, oy, 0.0});
  }
  static Grid make3d(int nx, int ny, int nz, double h, Vec3 o = {0, 0, 0}) {
    return Grid(3, {nx, ny, nz}, h, o);
  }

  void validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("grid dim must be 2 or 3");
    if (!(h > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    for (int a = 0; a < dim; ++a)
      if (shape[a] < 8) throw std::invalid_argument("grid shape must be >= 8 per axis");
    if (dim == 2 && shape[2] != 1) throw std::invalid_argument("2D grid needs shape[2] == 1");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k;
  }
  std::array<int, 3> coords(std::size_t idx) const {
    int k = static_cast<int>(idx % shape[2]);
    idx /= shape[2];
    int j = static_cast<int>(idx % shape[1]);
    int i = static_cast<int>(idx / shape[1]);
    return {i, j, k};
  }
  std::size_t stride(int axis) const {
    if (axis == 0) return static_cast<std::size_t>(shape[1]) * shape[2];
    if (axis == 1) return static_cast<std::size_t>(shape[2]);
    return 1;
  }
  Vec3 center(std::size_t idx) const {
    auto c = coords(idx);
    return {origin[0] + h * c[0], origin[1] + h * c[1], dim == 3 ? origin[2] + h * c[2] : 0.0};
  }
  Vec3 center(int i, int j, int k = 0) const {
    return {origin[0] + h * i, origin[1] + h * j, dim == 3 ? origin[2] + h * k : 0.0};
  }
  double cell_measure() const { return std::pow(h, dim); }
  double face_measure() const { return std::pow(h, dim - 1); }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < shape[0] && j < shape[1] && k < shape[2];
  }
  bool same_as(const Grid& o) const {
    return dim == o.dim && shape == o.shape && h == o.h && origin == o.origin;
  }

  // Calls f(a, b) for every pair of face-adjacent voxels, b = a + e_axis.
  template <class F>
  void for_each_face(F&& f) const {
    for (int axis = 0; axis < dim; ++axis) {
      const std::size_t s = stride(axis);
      for (int i = 0; i < shape[0]; ++i)
        for (int j = 0; j < shape[1]; ++j)
          for (int k = 0; k < shape[2]; ++k) {
            std::array<int, 3> c{i, j, k};
            if (c[axis] + 1 >= shape[axis]) continue;
            std::size_t a = index(i, j, k);
            f(a, a + s, axis);
          }
    }
  }

  // Face neighbors of voxel idx.
  template <class F>
  void for_each_neighbor(std::size_t idx, F&& f) const {
    auto c = coords(idx);
    for (int axis = 0; axis < dim; ++axis) {
      const std::size_t s = stride(axis);
      if (c[axis] > 0) f(idx - s);
      if (c[axis] + 1 < shape[axis]) f(idx + s);
    }
  }
};

template <class T>
struct Field {
  Grid grid;
  std::vector<T> values;

  Field() = default;
  explicit Field(const Grid& g, T fill = T{}) : grid(g), values(g.size(), fill) {}

  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
  T& at(int i, int j, int k = 0) { return values[grid.index(i, j, k)]; }
  const T& at(int i, int j, int k = 0) const { return values[grid.index(i, j, k)]; }
  std::size_t size() const { return values.size(); }
};

using ScalarField = Field<double>;
using Mask = Field<std::uint8_t>;

inline std::size_t count(const Mask& m) {
  std::size_t c = 0;
  for (auto v : m.values) c += v ? 1 : 0;
  return c;
}

inline Mask mask_or(const Mask& a, const Mask& b) {
  Mask r(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = (a[i] || b[i]) ? 1 : 0;
  return r;
}

inline Mask mask_not(const Mask& a) {
  Mask r(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] ? 0 : 1;
  return r;
}

// Face-connectivity dilation by `steps` voxels.
inline Mask dilate(const Mask& m, int steps = 1) {
  Mask cur = m;
  for (int s = 0; s < steps; ++s) {
    Mask nxt = cur;
    for (std::size_t i = 0; i < cur.size(); ++i)
      if (cur[i]) cur.grid.for_each_neighbor(i, [&](std::size_t j) { nxt[j] = 1; });
    cur = std::move(nxt);
  }
  return cur;
}

// Voxels of m having a face neighbor outside m (grid boundary counts as inside).
inline Mask boundary_voxels(const Mask& m) {
  Mask r(m.grid);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    bool b = false;
    m.grid.for_each_neighbor(i, [&](std::size_t j) { b = b || !m[j]; });
    r[i] = b ? 1 : 0;
  }
  return r;
}

// Throws if any value lies outside [0,1] or is not finite.
inline void check_unit_range(const ScalarField& u) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u[i] >= 0.0 && u[i] <= 1.0))
      throw std::domain_error("field value outside [0,1] at voxel " + std::to_string(i));
}

inline void clamp_unit(ScalarField& u) {
  for (auto& v : u.values) v = std::min(1.0, std::max(0.0, v));
}

// {u >= t}, wire-frame voxels excluded.
inline Mask superlevel_set(const ScalarField& u, double t, const Mask* wire = nullptr) {
  Mask r(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i)
    r[i] = (u[i] >= t && !(wire && (*wire)[i])) ? 1 : 0;
  return r;
}

// ---------------------------------------------------------------------------------------------
// Field dumps: <path> is the JSON header, <path>.raw the little-endian float64 payload.

struct FieldIOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string payload_path(const std::string& header_path) { return header_path + ".raw"; }

inline void dump_field(const ScalarField& u, const std::string& path) {
  nlohmann::json hdr;
  hdr["dim"] = u.grid.dim;
  std::vector<int> shape(u.grid.shape.begin(), u.grid.shape.begin() + u.grid.dim);
  hdr["shape"] = shape;
  hdr["spacing"] = u.grid.h;
  std::vector<double> origin(u.grid.origin.begin(), u.grid.origin.begin() + u.grid.dim);
  hdr["origin"] = origin;
  hdr["dtype"] = "f64";
  hdr["payload"] = std::filesystem::path(payload_path(path)).filename().string();
  {
    std::ofstream out(path);
    if (!out) throw FieldIOError("cannot write " + path);
    out << hdr.dump(2) << '\n';
  }
  std::ofstream raw(payload_path(path), std::ios::binary);
  if (!raw) throw FieldIOError("cannot write " + payload_path(path));
  static_assert(sizeof(double) == 8);
  for (double v : u.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xff);
    raw.write(reinterpret_cast<const char*>(b), 8);
  }
}

inline ScalarField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FieldIOError("cannot open " + path);
  nlohmann::json hdr;
  try {
    in >> hdr;
  } catch (const nlohmann::json::exception& e) {
    throw FieldIOError("malformed field header " + path + ": " + e.what());
  }
  Grid g;
  try {
    if (hdr.at("dtype").get<std::string>() != "f64") throw FieldIOError("unsupported dtype");
    int dim = hdr.at("dim").get<int>();
    auto shape = hdr.at("shape").get<std::vector<int>>();
    auto origin = hdr.at("origin").get<std::vector<double>>();
    if (static_cast<int>(shape.size()) != dim || static_cast<int>(origin.size()) != dim)
      throw FieldIOError("header shape/origin length does not match dim");
    std::array<int, 3> s{1, 1, 1};
    Vec3 o{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      s[a] = shape[a];
      o[a] = origin[a];
    }
    g = Grid(dim, s, hdr.at("spacing").get<double>(), o);
  } catch (const nlohmann::json::exception& e) {
    throw FieldIOError("malformed field header " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FieldIOError("malformed field header " + path + ": " + e.what());
  }
  std::string raw_path = payload_path(path);
  if (hdr.contains("payload"))
    raw_path = (std::filesystem::path(path).parent_path() / hdr["payload"].get<std::string>()).string();
  std::ifstream raw(raw_path, std::ios::binary | std::ios::ate);
  if (!raw) throw FieldIOError("cannot open payload " + raw_path);
  auto bytes = static_cast<std::size_t>(raw.tellg());
  if (bytes != g.size() * 8)
    throw FieldIOError("shape mismatch: header expects " + std::to_string(g.size()) +
                       " voxels, payload holds " + std::to_string(bytes / 8));
  raw.seekg(0);
  ScalarField u(g);
  std::vector<unsigned char> buf(bytes);
  raw.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(buf[8 * i + k]) << (8 * k);
    std::memcpy(&u.values[i], &bits, 8);
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(u[i] >= 0.0 && u[i] <= 1.0))
      throw FieldIOError("value outside [0,1] at voxel " + std::to_string(i) + " in " + raw_path);
  return u;
}

// Trilinear resampling of u onto grid g (clamped at the source grid boundary).
inline ScalarField resample(const ScalarField& u, const Grid& g) {
  if (u.grid.same_as(g)) return u;
  if (u.grid.dim != g.dim) throw std::invalid_argument("cannot resample across dimensions");
  ScalarField r(g);
  const Grid& s = u.grid;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    Vec3 x = g.center(idx);
    std::array<int, 3> i0{0, 0, 0};
    std::array<double, 3> f{0, 0, 0};
    for (int a = 0; a < s.dim; ++a) {
      double t = (x[a] - s.origin[a]) / s.h;
      t = std::clamp(t, 0.0, static_cast<double>(s.shape[a] - 1));
      i0[a] = std::min(static_cast<int>(t), s.shape[a] - 2);
      f[a] = t - i0[a];
    }
    double acc = 0.0;
    int corners = s.dim == 3 ? 8 : 4;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      std::array<int, 3> p{0, 0, 0};
      for (int a = 0; a < s.dim; ++a) {
        int bit = (c >> a) & 1;
        p[a] = i0[a] + bit;
        w *= bit ? f[a] : 1.0 - f[a];
      }
      acc += w * u.at(p[0], p[1], p[2]);
    }
    r[idx] = std::clamp(acc, 0.0, 1.0);
  }
  return r;
}

}  // namespace plateau
