#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"
#include "plateau/recovery.hpp"
#include "plateau/solver.hpp"

namespace plateau {

using json = nlohmann::json;

// A configuration problem, located at a line of the source text when one is known.
struct ConfigError : std::runtime_error {
  int line = 0;
  int column = 0;
  ConfigError(const std::string& msg, int l = 0, int c = 0) : std::runtime_error(format(msg, l, c)), line(l), column(c) {}

 private:
  static std::string format(const std::string& msg, int l, int c) {
    if (l <= 0) return msg;
    return "line " + std::to_string(l) + (c > 0 ? ":" + std::to_string(c) : "") + ": " + msg;
  }
};

// Parsed JSON plus its source text, so semantic errors can point at a line.
class ConfigDoc {
 public:
  ConfigDoc() = default;
  ConfigDoc(std::string text, std::string name) : text_(std::move(text)), name_(std::move(name)) {
    try {
      root_ = json::parse(text_);
    } catch (const json::parse_error& e) {
      auto [l, c] = line_col(e.byte > 0 ? e.byte - 1 : 0);
      throw ConfigError(name_ + ": malformed JSON (" + std::string(e.what()) + ")", l, c);
    }
    if (!root_.is_object()) throw ConfigError(name_ + ": top level must be an object", 1, 1);
  }

  static ConfigDoc load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ConfigDoc(ss.str(), path);
  }

  const json& root() const { return root_; }
  const std::string& name() const { return name_; }

  // Line of the key path (e.g. {"solver", "eps"}): each key is searched after the previous one.
  int line_of(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    for (const auto& k : path) {
      auto p = text_.find('"' + k + '"', pos);
      if (p == std::string::npos) break;
      pos = p + 1;
    }
    return pos == 0 ? 0 : line_col(pos - 1).first;
  }

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string p;
    for (const auto& k : path) p += (p.empty() ? "" : ".") + k;
    throw ConfigError(name_ + ": " + (p.empty() ? "" : p + ": ") + msg, line_of(path));
  }

 private:
  std::pair<int, int> line_col(std::size_t byte) const {
    int l = 1, c = 1;
    for (std::size_t i = 0; i < byte && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++l;
        c = 1;
      } else {
        ++c;
      }
    }
    return {l, c};
  }

  std::string text_;
  std::string name_;
  json root_ = json::object();
};

// Typed access to one JSON object with its path; records the keys read so leftovers are rejected.
class Section {
 public:
  Section(const ConfigDoc& doc, const json& j, std::vector<std::string> path)
      : doc_(&doc), j_(&j), path_(std::move(path)) {
    if (!j.is_object()) doc.fail(path_, "expected an object");
  }

  bool has(const std::string& k) const { return j_->contains(k); }

  template <class T>
  T get(const std::string& k) const {
    used_.insert(k);
    if (!j_->contains(k)) doc_->fail(path_, "missing key '" + k + "'");
    return convert<T>(k);
  }
  template <class T>
  T get(const std::string& k, const T& fallback) const {
    used_.insert(k);
    if (!j_->contains(k)) return fallback;
    return convert<T>(k);
  }
  template <class T>
  std::optional<T> opt(const std::string& k) const {
    used_.insert(k);
    if (!j_->contains(k)) return std::nullopt;
    return convert<T>(k);
  }
  Vec3 vec(const std::string& k, int dim) const {
    auto v = get<std::vector<double>>(k);
    if (static_cast<int>(v.size()) != dim && !(dim == 2 && v.size() == 3))
      doc_->fail(child(k), "expected " + std::to_string(dim) + " coordinates");
    return {v[0], v[1], v.size() > 2 ? v[2] : 0.0};
  }
  Section sub(const std::string& k) const {
    used_.insert(k);
    if (!j_->contains(k)) doc_->fail(path_, "missing section '" + k + "'");
    return Section(*doc_, (*j_)[k], child(k));
  }
  std::vector<Section> list(const std::string& k, bool required = true) const {
    used_.insert(k);
    std::vector<Section> out;
    if (!j_->contains(k)) {
      if (required) doc_->fail(path_, "missing list '" + k + "'");
      return out;
    }
    const json& a = (*j_)[k];
    if (!a.is_array()) doc_->fail(child(k), "expected a list");
    for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(*doc_, a[i], child(k));
    return out;
  }
  // Rejects keys that were never read.
  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) doc_->fail(child(it.key()), "unknown key");
  }
  [[noreturn]] void fail(const std::string& k, const std::string& msg) const { doc_->fail(child(k), msg); }
  const ConfigDoc& doc() const { return *doc_; }

 private:
  std::vector<std::string> child(const std::string& k) const {
    auto p = path_;
    p.push_back(k);
    return p;
  }
  template <class T>
  T convert(const std::string& k) const {
    try {
      return (*j_)[k].template get<T>();
    } catch (const json::exception&) {
      doc_->fail(child(k), "wrong type");
    }
  }

  const ConfigDoc* doc_;
  const json* j_;
  std::vector<std::string> path_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------------------------

inline Grid parse_grid(const Section& s) {
  int dim = s.get<int>("dim", 2);
  if (dim != 2 && dim != 3) s.fail("dim", "must be 2 or 3");
  auto shape = s.get<std::vector<int>>("shape");
  if (static_cast<int>(shape.size()) != dim) s.fail("shape", "expected " + std::to_string(dim) + " entries");
  double h = s.get<double>("h");
  if (!(h > 0)) s.fail("h", "must be positive");
  auto origin = s.get<std::vector<double>>("origin", std::vector<double>(dim, 0.0));
  if (static_cast<int>(origin.size()) != dim) s.fail("origin", "expected " + std::to_string(dim) + " entries");
  std::array<int, 3> n{1, 1, 1};
  Vec3 o{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    if (shape[a] < 2) s.fail("shape", "every extent must be at least 2");
    n[a] = shape[a];
    o[a] = origin[a];
  }
  s.finish();
  return Grid(dim, n, h, o);
}

inline Shape parse_shape(const Section& s, int dim) {
  auto type = s.get<std::string>("type");
  Shape out;
  if (type == "ball") {
    out = Ball{s.vec("center", dim), s.get<double>("radius")};
  } else if (type == "capsule") {
    out = Capsule{s.vec("a", dim), s.vec("b", dim), s.get<double>("radius")};
  } else if (type == "box") {
    out = Box{s.vec("lo", dim), s.vec("hi", dim)};
  } else if (type == "segment") {
    out = Segment{s.vec("a", dim), s.vec("b", dim)};
  } else if (type == "disk_patch") {
    out = DiskPatch{s.vec("center", 3), s.vec("normal", 3), s.get<double>("radius")};
  } else {
    s.fail("type", "unknown shape '" + type + "'");
  }
  s.finish();
  return out;
}

inline std::vector<Shape> parse_shapes(const std::vector<Section>& list, int dim) {
  std::vector<Shape> out;
  for (const auto& s : list) out.push_back(parse_shape(s, dim));
  return out;
}

inline SpanningClass parse_spanning(const Section& s, int dim) {
  SpanningClass sc;
  sc.slices_per_loop = s.get<int>("slices_per_loop", sc.slices_per_loop);
  sc.slice_pass_fraction = s.get<double>("pass_fraction", sc.slice_pass_fraction);
  if (sc.slices_per_loop < 4) s.fail("slices_per_loop", "must be at least 4");
  if (!(sc.slice_pass_fraction > 0 && sc.slice_pass_fraction <= 1)) s.fail("pass_fraction", "must lie in (0, 1]");
  for (const auto& l : s.list("loops")) {
    auto type = l.get<std::string>("type");
    double tube = l.get<double>("tube_radius");
    if (!(tube > 0)) l.fail("tube_radius", "must be positive");
    int samples = l.get<int>("samples");
    if (samples < 8) l.fail("samples", "must be at least 8");
    if (type == "circle") {
      Vec3 nrm = l.has("normal") ? l.vec("normal", 3) : Vec3{0, 0, 1};
      sc.add(circle_loop(l.vec("center", dim), l.get<double>("radius"), samples, nrm), tube);
    } else if (type == "rounded_rect") {
      sc.add(rounded_rect_loop(l.vec("center", dim), l.get<double>("hx"), l.get<double>("hy"), l.get<double>("rc"),
                               samples),
             tube);
    } else if (type == "rings") {
      // concentric circles r0, r0 + step, ... <= r1, each with `samples` points
      Vec3 c = l.vec("center", dim);
      double r0 = l.get<double>("r0"), r1 = l.get<double>("r1"), step = l.get<double>("step");
      if (!(step > 0) || !(r0 > 0) || r1 < r0) l.fail("step", "need 0 < r0 <= r1 and step > 0");
      for (double r = r0; r <= r1 + 1e-12; r += step) sc.add(circle_loop(c, r, samples), tube);
    } else {
      l.fail("type", "unknown loop '" + type + "'");
    }
    l.finish();
  }
  s.finish();
  return sc;
}

enum class InitKind { uniform, noise, recovery };

struct SolverSection {
  SolverConfig config;
  InitKind init = InitKind::noise;
  double recovery_M = 4.0;
};

inline SolverSection parse_solver(const Section& s, SolverSection base = {}) {
  SolverSection out = base;
  SolverConfig& c = out.config;
  c.eps = s.get<double>("eps", c.eps);
  c.v = s.get<double>("v", c.v);
  c.delta = s.get<double>("delta", c.delta);
  if (auto t = s.opt<double>("t_check")) c.t_check = *t;
  c.check_levels = s.get<std::vector<double>>("check_levels", c.check_levels);
  c.max_iters = s.get<int>("max_iters", c.max_iters);
  auto policy = s.get<std::string>("step_policy", c.backtracking ? "backtracking" : "fixed");
  if (policy != "backtracking" && policy != "fixed") s.fail("step_policy", "expected 'backtracking' or 'fixed'");
  c.backtracking = policy == "backtracking";
  if (auto t = s.opt<double>("step_size")) c.step_size = *t;
  c.grad_tol = s.get<double>("grad_tol", c.grad_tol);
  c.stall_tol = s.get<double>("stall_tol", c.stall_tol);
  c.stall_window = s.get<int>("stall_window", c.stall_window);
  c.volume_tol = s.get<double>("volume_tol", c.volume_tol);
  c.seed = s.get<unsigned>("seed", c.seed);
  c.sfr_tau0 = s.get<double>("sfr_tau0", c.sfr_tau0);
  c.sfr_tau1 = s.get<double>("sfr_tau1", c.sfr_tau1);
  c.k_span = s.get<int>("k_span", c.k_span);
  c.pin_release = s.get<int>("pin_release", c.pin_release);
  c.burn_in = s.get<int>("burn_in", c.burn_in);
  c.min_iters = s.get<int>("min_iters", c.min_iters);
  auto init = s.get<std::string>("init", out.init == InitKind::noise     ? "noise"
                                         : out.init == InitKind::uniform ? "uniform"
                                                                         : "recovery");
  if (init == "noise") out.init = InitKind::noise;
  else if (init == "uniform") out.init = InitKind::uniform;
  else if (init == "recovery") out.init = InitKind::recovery;
  else s.fail("init", "expected 'noise', 'uniform' or 'recovery'");
  out.recovery_M = s.get<double>("recovery_M", out.recovery_M);
  s.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    s.doc().fail({"solver"}, e.what());
  }
  return out;
}

// A full run description: frame, spanning class, solver settings, optional recovery data.
struct RunConfig {
  Grid grid;
  std::vector<Shape> wire_shapes;
  SpanningClass spanning;
  SolverSection solver;
  std::vector<Shape> K_shapes, E_shapes;  // sharp data for the recovery init
  json experiment = json::object();

  Problem problem() const {
    Problem P;
    P.wire = WireFrame(grid, wire_shapes);
    P.span = realize(spanning, grid, &P.wire.mask);
    P.W = Potential(grid.dim - 1);
    return P;
  }
  SharpInterfaceData sharp(const Grid& g) const {
    return {K_shapes.empty() ? Mask(g) : voxelize(K_shapes, g), E_shapes.empty() ? Mask(g) : voxelize(E_shapes, g)};
  }
};

inline RunConfig parse_run_config(const ConfigDoc& doc) {
  Section root(doc, doc.root(), {});
  RunConfig rc;
  rc.grid = parse_grid(root.sub("grid"));
  const int dim = rc.grid.dim;
  {
    auto w = root.sub("wireframe");
    rc.wire_shapes = parse_shapes(w.list("shapes"), dim);
    w.finish();
  }
  rc.spanning = root.has("spanning") ? parse_spanning(root.sub("spanning"), dim) : SpanningClass{};
  rc.solver = parse_solver(root.sub("solver"));
  if (root.has("recovery")) {
    auto r = root.sub("recovery");
    rc.K_shapes = parse_shapes(r.list("K", false), dim);
    rc.E_shapes = parse_shapes(r.list("E", false), dim);
    r.finish();
  }
  if (rc.solver.init == InitKind::recovery && rc.K_shapes.empty() && rc.E_shapes.empty())
    doc.fail({"solver", "init"}, "recovery init needs a 'recovery' section with K and/or E shapes");
  if (root.has("experiment")) {
    (void)root.sub("experiment");
    rc.experiment = doc.root()["experiment"];
  }
  root.finish();
  return rc;
}

}  // namespace plateau
