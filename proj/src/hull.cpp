#include "ecomp/envelope.hpp"

#include "ecomp/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace ecomp {

namespace {

double extent(const Matrix &p) {
  double e = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c)
    e = std::max(e, p.col(c).maxCoeff() - p.col(c).minCoeff());
  for (Eigen::Index c = 0; c < p.cols(); ++c)
    e = std::max(e, p.col(c).cwiseAbs().maxCoeff() * 1e-3);
  return e;
}

void finish_vertices(HullModel &h, const Matrix &points) {
  h.vertices.resize(static_cast<Eigen::Index>(h.vertex_index.size()), points.cols());
  for (std::size_t k = 0; k < h.vertex_index.size(); ++k)
    h.vertices.row(static_cast<Eigen::Index>(k)) = points.row(static_cast<Eigen::Index>(h.vertex_index[k]));
}

// ---------------------------------------------------------------------------
// 2-D quickhull

struct Quick2d {
  const Matrix &p;
  double eps;
  std::vector<std::size_t> out;

  double cross(std::size_t a, std::size_t b, std::size_t c) const {
    return (p(b, 0) - p(a, 0)) * (p(c, 1) - p(a, 1)) - (p(b, 1) - p(a, 1)) * (p(c, 0) - p(a, 0));
  }

  /// Emits hull vertices strictly left of a->b, in order from a toward b (a excluded).
  void recurse(std::size_t a, std::size_t b, const std::vector<std::size_t> &set) {
    if (set.empty())
      return;
    std::size_t far = set.front();
    double best = -1.0;
    for (auto s : set) {
      const double d = cross(a, b, s);
      if (d > best) {
        best = d;
        far = s;
      }
    }
    std::vector<std::size_t> left_a, left_b;
    for (auto s : set) {
      if (s == far)
        continue;
      if (cross(a, far, s) > eps)
        left_a.push_back(s);
      else if (cross(far, b, s) > eps)
        left_b.push_back(s);
    }
    recurse(a, far, left_a);
    out.push_back(far);
    recurse(far, b, left_b);
  }
};

// ---------------------------------------------------------------------------
// 3-D quickhull with conflict lists

struct Face {
  std::array<std::size_t, 3> v;
  Eigen::Vector3d n;
  double off = 0.0;
  std::vector<std::size_t> outside;
  bool alive = true;
};

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

class Quick3d {
public:
  Quick3d(const Matrix &p, double eps) : p_(p), eps_(eps) {}

  HullModel run() {
    const auto n = static_cast<std::size_t>(p_.rows());
    const auto simplex = initial_simplex();
    for (int a = 0; a < 4; ++a) {
      std::array<std::size_t, 3> f{};
      int k = 0;
      for (int b = 0; b < 4; ++b)
        if (b != a)
          f[static_cast<std::size_t>(k++)] = simplex[static_cast<std::size_t>(b)];
      add_face(f[0], f[1], f[2], simplex[static_cast<std::size_t>(a)]);
    }

    std::vector<char> in_simplex(n, 0);
    for (auto s : simplex)
      in_simplex[s] = 1;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_simplex[i])
        rest.push_back(i);
    assign(rest, 0);

    for (std::size_t fi = 0; fi < faces_.size(); ++fi)
      if (faces_[fi].alive && !faces_[fi].outside.empty())
        expand(fi);

    HullModel h;
    h.dim = 3;
    std::vector<char> used(n, 0);
    std::size_t alive = 0;
    for (const auto &f : faces_)
      if (f.alive) {
        ++alive;
        for (auto v : f.v)
          used[v] = 1;
      }
    h.normals.resize(static_cast<Eigen::Index>(alive), 3);
    std::size_t k = 0;
    for (const auto &f : faces_)
      if (f.alive) {
        h.normals.row(static_cast<Eigen::Index>(k)) = f.n.transpose();
        h.offsets.push_back(f.off);
        ++k;
      }
    for (std::size_t i = 0; i < n; ++i)
      if (used[i])
        h.vertex_index.push_back(i);
    finish_vertices(h, p_);
    return h;
  }

private:
  Eigen::Vector3d pt(std::size_t i) const { return p_.row(static_cast<Eigen::Index>(i)).transpose(); }

  double dist(const Face &f, std::size_t i) const { return f.n.dot(pt(i)) - f.off; }

  std::array<std::size_t, 4> initial_simplex() const {
    const auto n = static_cast<std::size_t>(p_.rows());
    // Extreme pair along the widest axis.
    Eigen::Index axis = 0;
    double widest = -1.0;
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double w = p_.col(c).maxCoeff() - p_.col(c).minCoeff();
      if (w > widest) {
        widest = w;
        axis = c;
      }
    }
    std::size_t i0 = 0, i1 = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (p_(static_cast<Eigen::Index>(i), axis) < p_(static_cast<Eigen::Index>(i0), axis))
        i0 = i;
      if (p_(static_cast<Eigen::Index>(i), axis) > p_(static_cast<Eigen::Index>(i1), axis))
        i1 = i;
    }
    if (!(widest > eps_))
      throw Error("hull.degenerate", "points are coincident");
    const Eigen::Vector3d a = pt(i0);
    const Eigen::Vector3d dir = (pt(i1) - a).normalized();
    std::size_t i2 = n;
    double best = eps_;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d v = pt(i) - a;
      const double d = (v - v.dot(dir) * dir).norm();
      if (d > best) {
        best = d;
        i2 = i;
      }
    }
    if (i2 == n)
      throw Error("hull.degenerate", "points are collinear");
    const Eigen::Vector3d nrm = (pt(i1) - a).cross(pt(i2) - a).normalized();
    std::size_t i3 = n;
    best = eps_;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(nrm.dot(pt(i) - a));
      if (d > best) {
        best = d;
        i3 = i;
      }
    }
    if (i3 == n)
      throw Error("hull.degenerate", "points are coplanar");
    return {i0, i1, i2, i3};
  }

  /// Adds face (a, b, c) oriented away from `inside_ref`.
  std::size_t add_face(std::size_t a, std::size_t b, std::size_t c, std::size_t inside_ref) {
    Face f;
    f.v = {a, b, c};
    f.n = (pt(b) - pt(a)).cross(pt(c) - pt(a)).normalized();
    f.off = f.n.dot(pt(a));
    if (f.n.dot(pt(inside_ref)) - f.off > 0.0) {
      std::swap(f.v[1], f.v[2]);
      f.n = -f.n;
      f.off = -f.off;
    }
    return push_face(std::move(f));
  }

  /// Adds face (a, b, c) keeping the given winding.
  std::size_t add_face_wound(std::size_t a, std::size_t b, std::size_t c) {
    Face f;
    f.v = {a, b, c};
    f.n = (pt(b) - pt(a)).cross(pt(c) - pt(a)).normalized();
    f.off = f.n.dot(pt(a));
    return push_face(std::move(f));
  }

  std::size_t push_face(Face f) {
    const std::size_t id = faces_.size();
    for (int e = 0; e < 3; ++e)
      edges_[edge_key(f.v[static_cast<std::size_t>(e)], f.v[static_cast<std::size_t>((e + 1) % 3)])] = id;
    faces_.push_back(std::move(f));
    return id;
  }

  /// Moves each point to the outside set of the face it is farthest above,
  /// among faces with index >= first.
  void assign(const std::vector<std::size_t> &pts, std::size_t first,
              const std::vector<std::size_t> *only = nullptr) {
    for (auto i : pts) {
      double best = eps_;
      std::size_t owner = faces_.size();
      auto consider = [&](std::size_t fi) {
        if (!faces_[fi].alive)
          return;
        const double d = dist(faces_[fi], i);
        if (d > best) {
          best = d;
          owner = fi;
        }
      };
      if (only)
        for (auto fi : *only)
          consider(fi);
      else
        for (std::size_t fi = first; fi < faces_.size(); ++fi)
          consider(fi);
      if (owner < faces_.size())
        faces_[owner].outside.push_back(i);
    }
  }

  void expand(std::size_t start) {
    auto &sf = faces_[start];
    std::size_t apex = sf.outside.front();
    double best = dist(sf, apex);
    for (auto i : sf.outside) {
      const double d = dist(sf, i);
      if (d > best) {
        best = d;
        apex = i;
      }
    }

    // Visible region by flood fill from the start face.
    std::vector<std::size_t> visible{start};
    std::unordered_map<std::size_t, bool> is_visible{{start, true}};
    for (std::size_t q = 0; q < visible.size(); ++q) {
      const auto f = faces_[visible[q]].v;
      for (int e = 0; e < 3; ++e) {
        const auto a = f[static_cast<std::size_t>(e)];
        const auto b = f[static_cast<std::size_t>((e + 1) % 3)];
        const auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end())
          continue;
        const auto nb = it->second;
        if (is_visible.count(nb))
          continue;
        const bool vis = faces_[nb].alive && dist(faces_[nb], apex) > eps_;
        is_visible[nb] = vis;
        if (vis)
          visible.push_back(nb);
      }
    }

    std::vector<std::pair<std::size_t, std::size_t>> horizon;
    for (auto fi : visible) {
      const auto f = faces_[fi].v;
      for (int e = 0; e < 3; ++e) {
        const auto a = f[static_cast<std::size_t>(e)];
        const auto b = f[static_cast<std::size_t>((e + 1) % 3)];
        const auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end() || !is_visible[it->second])
          horizon.emplace_back(a, b);
      }
    }

    std::vector<std::size_t> orphans;
    for (auto fi : visible) {
      auto &f = faces_[fi];
      f.alive = false;
      for (auto i : f.outside)
        if (i != apex)
          orphans.push_back(i);
      f.outside.clear();
      for (int e = 0; e < 3; ++e)
        edges_.erase(edge_key(f.v[static_cast<std::size_t>(e)], f.v[static_cast<std::size_t>((e + 1) % 3)]));
    }

    std::vector<std::size_t> created;
    for (const auto &[a, b] : horizon)
      created.push_back(add_face_wound(a, b, apex));
    std::sort(orphans.begin(), orphans.end());
    assign(orphans, 0, &created);
  }

  const Matrix &p_;
  double eps_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, std::size_t> edges_;
};

// ---------------------------------------------------------------------------
// Phase-1 simplex for convex-combination feasibility

bool phase_one_feasible(const Eigen::MatrixXd &a_in, const Eigen::VectorXd &b_in, double tol) {
  const Eigen::Index m = a_in.rows();
  const Eigen::Index n = a_in.cols();
  Eigen::MatrixXd a = a_in;
  Eigen::VectorXd b = b_in;
  for (Eigen::Index r = 0; r < m; ++r)
    if (b(r) < 0.0) {
      a.row(r) *= -1.0;
      b(r) *= -1.0;
    }
  // Tableau columns: n structural, m artificial, rhs.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.block(0, n + m, m, 1) = b;
  // Objective row holds reduced costs of min sum(artificials).
  for (Eigen::Index r = 0; r < m; ++r)
    t.row(m) -= t.row(r);
  t.block(m, n, 1, m).setZero();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::iota(basis.begin(), basis.end(), n);

  const double pivot_eps = 1e-12;
  for (std::size_t guard = 0; guard < 50'000; ++guard) {
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < n + m; ++c)
      if (t(m, c) < -pivot_eps) {
        enter = c;
        break;
      }
    if (enter < 0)
      break;
    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m; ++r) {
      if (t(r, enter) > pivot_eps) {
        const double ratio = t(r, n + m) / t(r, enter);
        if (ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
          best_ratio = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0)
      break;
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index r = 0; r <= m; ++r)
      if (r != leave && t(r, enter) != 0.0)
        t.row(r) -= t(r, enter) * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  // Remaining infeasibility = sum of artificial values = -objective.
  return -t(m, n + m) <= tol;
}

} // namespace

// ---------------------------------------------------------------------------

HullModel quickhull_2d(const Matrix &points) {
  if (points.cols() != 2)
    throw Error("hull.dimension", "quickhull_2d needs 2-D points");
  if (points.rows() < 3)
    throw Error("hull.degenerate", "need at least three points");
  const double ext = extent(points);
  const double eps = 1e-12 * ext * ext;
  Quick2d q{points, eps, {}};

  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < static_cast<std::size_t>(points.rows()); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto l = static_cast<Eigen::Index>(lo);
    const auto h = static_cast<Eigen::Index>(hi);
    if (points(r, 0) < points(l, 0) || (points(r, 0) == points(l, 0) && points(r, 1) < points(l, 1)))
      lo = i;
    if (points(r, 0) > points(h, 0) || (points(r, 0) == points(h, 0) && points(r, 1) > points(h, 1)))
      hi = i;
  }
  std::vector<std::size_t> above, below;
  for (std::size_t i = 0; i < static_cast<std::size_t>(points.rows()); ++i) {
    const double c = q.cross(lo, hi, i);
    if (c > eps)
      above.push_back(i);
    else if (c < -eps)
      below.push_back(i);
  }
  if (above.empty() && below.empty())
    throw Error("hull.degenerate", "points are collinear");

  // Counter-clockwise: lo, lower chain, hi, upper chain.
  q.out.push_back(lo);
  q.recurse(hi, lo, below);
  // recurse(hi, lo, below) emits from hi toward lo; reverse that part.
  std::reverse(q.out.begin() + 1, q.out.end());
  q.out.push_back(hi);
  const auto upper_start = static_cast<std::ptrdiff_t>(q.out.size());
  q.recurse(lo, hi, above);
  std::reverse(q.out.begin() + upper_start, q.out.end());

  HullModel h;
  h.dim = 2;
  h.vertex_index = q.out;
  finish_vertices(h, points);
  const auto nv = h.vertex_index.size();
  h.normals.resize(static_cast<Eigen::Index>(nv), 2);
  h.offsets.resize(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    const auto a = h.vertices.row(static_cast<Eigen::Index>(k));
    const auto b = h.vertices.row(static_cast<Eigen::Index>((k + 1) % nv));
    Eigen::Vector2d nrm(b(1) - a(1), -(b(0) - a(0)));
    nrm.normalize();
    h.normals.row(static_cast<Eigen::Index>(k)) = nrm.transpose();
    h.offsets[k] = nrm.dot(Eigen::Vector2d(a(0), a(1)));
  }
  return h;
}

HullModel hull_3d(const Matrix &points) {
  if (points.cols() != 3)
    throw Error("hull.dimension", "hull_3d needs 3-D points");
  if (points.rows() < 4)
    throw Error("hull.degenerate", "need at least four points");
  const double eps = 1e-10 * extent(points);
  return Quick3d(points, eps).run();
}

HullModel hull_lp(const Matrix &points) {
  if (points.rows() < 1)
    throw Error("hull.degenerate", "empty point set");
  HullModel h;
  h.dim = static_cast<std::size_t>(points.cols());
  h.points = points;
  h.vertex_index.resize(static_cast<std::size_t>(points.rows()));
  std::iota(h.vertex_index.begin(), h.vertex_index.end(), 0);
  h.vertices = points;
  return h;
}

HullModel build_hull(const Matrix &points) {
  if (points.cols() == 2)
    return quickhull_2d(points);
  if (points.cols() == 3)
    return hull_3d(points);
  return hull_lp(points);
}

bool lp_contains(const Matrix &points, std::span<const double> x, double tol) {
  const auto d = points.cols();
  if (static_cast<Eigen::Index>(x.size()) != d)
    throw Error("hull.dimension", "point dimension does not match the hull");
  std::vector<double> lo(static_cast<std::size_t>(d)), span(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) {
    lo[static_cast<std::size_t>(c)] = points.col(c).minCoeff();
    const double hi = points.col(c).maxCoeff();
    span[static_cast<std::size_t>(c)] = hi > lo[static_cast<std::size_t>(c)] ? hi - lo[static_cast<std::size_t>(c)] : 1.0;
    const double slack = tol * span[static_cast<std::size_t>(c)];
    if (x[static_cast<std::size_t>(c)] < lo[static_cast<std::size_t>(c)] - slack || x[static_cast<std::size_t>(c)] > hi + slack)
      return false;
  }
  Eigen::MatrixXd a(d + 1, points.rows());
  Eigen::VectorXd b(d + 1);
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    for (Eigen::Index r = 0; r < points.rows(); ++r)
      a(c, r) = (points(r, c) - x[cs]) / span[cs];
    b(c) = 0.0;
  }
  a.row(d).setOnes();
  b(d) = 1.0;
  return phase_one_feasible(a, b, tol);
}

bool hull_contains(const HullModel &hull, std::span<const double> x, double tol) {
  if (x.size() != hull.dim)
    throw Error("hull.dimension",
                fmt::format("point has {} coordinates, hull is {}-D", x.size(), hull.dim));
  if (hull.uses_lp())
    return lp_contains(hull.points, x, tol);
  for (Eigen::Index f = 0; f < hull.normals.rows(); ++f) {
    double s = -hull.offsets[static_cast<std::size_t>(f)];
    for (std::size_t c = 0; c < x.size(); ++c)
      s += hull.normals(f, static_cast<Eigen::Index>(c)) * x[c];
    if (s > tol)
      return false;
  }
  return true;
}

std::vector<char> hull_contains_batch(const HullModel &hull, const Matrix &x, double tol,
                                      Exec exec) {
  if (static_cast<std::size_t>(x.cols()) != hull.dim)
    throw Error("hull.dimension", "point dimension does not match the hull");
  std::vector<char> out(static_cast<std::size_t>(x.rows()));
  if (!hull.uses_lp()) {
    std::vector<double> worst(out.size());
    kernels::halfspace_max_violation(x, hull.normals, hull.offsets, worst, exec);
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = worst[k] <= tol;
    return out;
  }
  auto one = [&](Eigen::Index r) {
    out[static_cast<std::size_t>(r)] =
        lp_contains(hull.points, {x.row(r).data(), static_cast<std::size_t>(x.cols())}, tol);
  };
  if (exec == Exec::serial) {
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      one(r);
  } else {
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      one(r);
  }
  return out;
}

} // namespace ecomp
