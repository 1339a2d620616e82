#include "stopline/boundary.hpp"

#include "stopline/errors.hpp"
#include "stopline/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stopline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lagrange interpolant through up to four nodes.
struct Cubic {
  double xs[4];
  double ys[4];
  int n = 0;
  double operator()(double x) const {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      double w = ys[a];
      for (int c = 0; c < n; ++c)
        if (c != a) w *= (x - xs[c]) / (xs[a] - xs[c]);
      s += w;
    }
    return s;
  }
};

// Derivative at z of the quadratic through three (x, y) pairs.
double quad_slope(const double* x, const double* y, double z) {
  const double d01 = (y[1] - y[0]) / (x[1] - x[0]);
  const double d12 = (y[2] - y[1]) / (x[2] - x[1]);
  const double d012 = (d12 - d01) / (x[2] - x[0]);
  return d01 + d012 * ((z - x[0]) + (z - x[1]));
}

}  // namespace

bool Boundary::finite(int i) const { return std::isfinite(b[i]); }

Boundary extract_boundary(const ValueSurface& vs, Orientation orientation, const ExtractOptions& opt) {
  const Grid& g = vs.grid;
  const int M = g.M();
  const int N = g.N();
  const auto window = opt.window ? *opt.window : std::make_pair(g.x.front(), g.x.back());
  int jlo = 0;
  while (jlo < M && g.x[jlo] < window.first) ++jlo;
  int jhi = M;
  while (jhi > 0 && g.x[jhi] > window.second) --jhi;
  if (jhi - jlo < 1) throw make_error("BadDomain", "boundary window holds fewer than two nodes");
  const bool below = orientation == Orientation::StopBelow;
  const int n = jhi - jlo + 1;
  auto node = [&](int k) { return below ? jlo + k : jhi - k; };

  Boundary out;
  out.orientation = orientation;
  out.dx = g.mean_dx();
  out.dt = g.dt();
  out.horizon = g.horizon();
  out.window = window;
  for (int i = 0; i < N; ++i) {
    std::vector<Phase> ph(n);
    for (int k = 0; k < n; ++k) ph[k] = vs.phase(i, node(k));
    int end = n;
    bool far = false;
    if (ph[n - 1] == Phase::Stop) {
      int k = n - 1;
      bool flat = true;
      while (k >= 0 && ph[k] == Phase::Stop) {
        if (std::fabs(vs.pde_res(i, node(k))) > opt.far_field_tol) flat = false;
        --k;
      }
      if (k >= 0 && ph[k] == Phase::Continue && flat) {
        end = k + 1;
        far = true;
      }
    }
    int changes = 0;
    int first = -1;
    for (int k = 1; k < end; ++k) {
      if (ph[k] != ph[k - 1]) {
        ++changes;
        if (first < 0) first = k;
      }
    }
    double b;
    int stop = -1;
    int mult = changes;
    if (first < 0) {
      const bool all_stop = ph[0] == Phase::Stop;
      b = (all_stop == below) ? kInf : -kInf;
      mult = 0;
    } else {
      if (ph[0] == Phase::Continue) ++mult;
      stop = node(first - 1);
      b = 0.5 * (g.x[node(first - 1)] + g.x[node(first)]);
    }
    out.t.push_back(g.t[i]);
    out.b.push_back(b);
    out.coarse.push_back(b);
    out.multiplicity.push_back(mult);
    out.stop_node.push_back(stop);
    out.far_field.push_back(far);
  }
  return out;
}

double refine_crossing(const ValueSurface& vs, int i, int j) {
  const Grid& g = vs.grid;
  const int M = g.M();
  if (j < 0 || j >= M) throw make_error("NoSignChange", "bracket outside the grid");
  const double fa = vs.v(i, j) - vs.g(i, j);
  const double fb = vs.v(i, j + 1) - vs.g(i, j + 1);
  const double tol = vs.tol_indicator;
  const bool forward = fa <= tol && fb > tol;
  const bool backward = fb <= tol && fa > tol;
  if (!forward && !backward)
    throw make_error("NoSignChange", "V - G does not cross the indicator tolerance in [x_" + std::to_string(j) +
                                         ", x_" + std::to_string(j + 1) + "] at slice " + std::to_string(i));
  const double f_stop = forward ? fa : fb;
  double lo = forward ? g.x[j] : g.x[j + 1];  // stop end
  double hi = forward ? g.x[j + 1] : g.x[j];  // continuation end
  Cubic p;
  double level = 0.0;
  if (f_stop >= 0.0) {
    // Obstacle contact: V - G grows like (x - b)^2 past the crossing, so its
    // square root is interpolated through continuation-side nodes. The node
    // next to the contact is skipped when enough others are available.
    const int step = forward ? 1 : -1;
    double xs[5];
    double qs[5];
    int n = 0;
    for (int k = forward ? j + 1 : j; n < 5 && k >= 0 && k <= M; k += step) {
      const double f = vs.v(i, k) - vs.g(i, k);
      if (!(f > tol)) break;
      xs[n] = g.x[k];
      qs[n] = std::sqrt(f);
      ++n;
    }
    const int skip = n >= 3 ? 1 : 0;
    for (int a = skip; a < n && p.n < 4; ++a) {
      p.xs[p.n] = xs[a];
      p.ys[p.n] = qs[a];
      ++p.n;
    }
    if (p.n >= 2) {
      // The discrete contact set lags the crossing by up to a cell, so the
      // root is sought one cell further onto the stopping side.
      const int back = forward ? j - 1 : j + 2;
      if (back >= 0 && back <= M) lo = g.x[back];
      if (p(lo) >= 0.0) return lo;
      for (int it = 0; it < 40; ++it) {
        const double m = 0.5 * (lo + hi);
        if (p(m) > 0.0) hi = m; else lo = m;
      }
      return 0.5 * (lo + hi);
    }
    p.n = 0;
    level = f_stop > 0.0 ? tol : 0.0;
  }
  const int s = std::clamp(j - 1, 0, std::max(0, M - 3));
  p.n = std::min(4, M + 1);
  for (int a = 0; a < p.n; ++a) {
    p.xs[a] = g.x[s + a];
    p.ys[a] = vs.v(i, s + a) - vs.g(i, s + a);
  }
  if (p(hi) - level <= 0.0) return 0.5 * (lo + hi);
  for (int it = 0; it < 40; ++it) {
    const double m = 0.5 * (lo + hi);
    if (p(m) - level > 0.0) hi = m; else lo = m;
  }
  return 0.5 * (lo + hi);
}

Boundary refine_boundary(const ValueSurface& vs, Orientation orientation, const ExtractOptions& opt) {
  Boundary b = extract_boundary(vs, orientation, opt);
  const bool below = orientation == Orientation::StopBelow;
  for (int i = 0; i < b.size(); ++i) {
    if (!b.finite(i)) continue;
    const int j = below ? b.stop_node[i] : b.stop_node[i] - 1;
    try {
      b.b[i] = refine_crossing(vs, i, j);
    } catch (const Error&) {
      // coarse midpoint stays in place
    }
  }
  return b;
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Increasing: return "INCREASING";
    case Direction::Decreasing: return "DECREASING";
    case Direction::Flat: return "FLAT";
  }
  return "FLAT";
}

std::vector<MonotoneSegment> segment_monotone(const Boundary& b, double mono_tol) {
  std::vector<int> idx;
  for (int i = 0; i < b.size(); ++i)
    if (b.usable(i)) idx.push_back(i);
  if (idx.size() < 2) throw make_error("AllSentinel", "fewer than two finite single-crossing boundary nodes");
  std::vector<MonotoneSegment> segs;
  std::size_t s = 0;
  while (s + 1 < idx.size()) {
    bool inc = true;
    bool dec = true;
    std::size_t e = s;
    while (e + 1 < idx.size()) {
      const double d = b.b[idx[e + 1]] - b.b[idx[e]];
      const bool inc2 = inc && d >= -mono_tol;
      const bool dec2 = dec && d <= mono_tol;
      if (!inc2 && !dec2) break;
      inc = inc2;
      dec = dec2;
      ++e;
    }
    const double net = b.b[idx[e]] - b.b[idx[s]];
    MonotoneSegment seg;
    seg.i1 = idx[s];
    seg.i2 = idx[e];
    seg.tol = mono_tol;
    seg.direction = std::fabs(net) <= mono_tol ? Direction::Flat : (net > 0 ? Direction::Increasing : Direction::Decreasing);
    segs.push_back(seg);
    s = e;
  }
  return segs;
}

namespace {

struct Increment {
  double t;  // midpoint time
  double size;
};

std::vector<Increment> increments(const Boundary& b, double t_max) {
  std::vector<Increment> out;
  for (int i = 0; i + 1 < b.size(); ++i) {
    if (!b.usable(i) || !b.usable(i + 1)) continue;
    if (b.t[i + 1] > t_max + 1e-12) break;
    out.push_back({0.5 * (b.t[i] + b.t[i + 1]), std::fabs(b.b[i + 1] - b.b[i])});
  }
  return out;
}

}  // namespace

JumpReport detect_jumps(const std::vector<Boundary>& levels, double jump_factor, double t_fraction) {
  if (levels.size() < 3) throw make_error("SchemaError", "detect_jumps needs at least three refinement levels");
  JumpReport r;
  r.jump_factor = jump_factor;
  r.t_max = t_fraction * levels.front().horizon;
  std::vector<std::vector<Increment>> inc;
  for (const Boundary& b : levels) {
    inc.push_back(increments(b, r.t_max));
    double m = 0.0;
    for (const Increment& d : inc.back()) m = std::max(m, d.size);
    r.max_increment.push_back(m);
    r.dx.push_back(b.dx);
    r.dt.push_back(b.dt);
  }
  const double w = 2.0 * levels.front().dt;
  const std::vector<Increment>& fine = inc.back();
  std::vector<Increment> cand;
  for (const Increment& d : fine) {
    if (d.size <= jump_factor * levels.back().dx) continue;
    if (!cand.empty() && d.t - cand.back().t <= w) {
      if (d.size > cand.back().size) cand.back() = d;
    } else {
      cand.push_back(d);
    }
  }
  for (const Increment& c : cand) {
    JumpFlag f;
    f.t = c.t;
    bool persistent = true;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      double m = 0.0;
      for (const Increment& d : inc[l])
        if (std::fabs(d.t - c.t) <= w) m = std::max(m, d.size);
      f.persistence.push_back(m);
      if (!(m > jump_factor * levels[l].dx)) persistent = false;
      if (l > 0 && !(m >= 0.75 * f.persistence[l - 1])) persistent = false;
    }
    f.size = f.persistence.back();
    (persistent ? r.flags : r.candidates).push_back(f);
  }
  return r;
}

double smooth_fit_gap(const ValueSurface& vs, const Boundary& b, int i) {
  if (i < 0 || i >= b.size() || !b.finite(i))
    throw make_error("SentinelSlice", "no finite boundary at slice " + std::to_string(i));
  const Grid& g = vs.grid;
  const int M = g.M();
  const bool below = b.orientation == Orientation::StopBelow;
  const int s = b.stop_node[i];
  const int c = below ? s + 1 : s - 1;
  const int step = below ? 1 : -1;
  auto slope = [&](int from, int dir, bool use_v) {
    int k0 = from;
    int k2 = from + 2 * dir;
    if (k2 < 0 || k2 > M) {
      const int k1 = std::clamp(from + dir, 0, M);
      if (k1 == from) return 0.0;
      const double y0 = use_v ? vs.v(i, from) : vs.g(i, from);
      const double y1 = use_v ? vs.v(i, k1) : vs.g(i, k1);
      return (y1 - y0) / (g.x[k1] - g.x[from]);
    }
    double xs[3];
    double ys[3];
    for (int a = 0; a < 3; ++a) {
      const int k = k0 + a * dir;
      xs[a] = g.x[k];
      ys[a] = use_v ? vs.v(i, k) : vs.g(i, k);
    }
    return quad_slope(xs, ys, b.b[i]);
  };
  const double vx = slope(c, step, true);
  const double gx = slope(s, -step, false);
  return vx - gx;
}

std::vector<double> smooth_fit_gaps(const ValueSurface& vs, const Boundary& b) {
  std::vector<double> out(b.size(), std::numeric_limits<double>::quiet_NaN());
  bool any = false;
  for (int i = 0; i < b.size(); ++i) {
    if (!b.finite(i)) continue;
    out[i] = smooth_fit_gap(vs, b, i);
    any = true;
  }
  if (!any) throw make_error("SentinelSlice", "boundary has no finite slice");
  return out;
}

std::string boundary_csv(const Boundary& b, const std::vector<double>& gaps) {
  std::string out = "t,b,multiplicity,smooth_fit_gap\n";
  for (int i = 0; i < b.size(); ++i) {
    out += fmt17(b.t[i]);
    out += ',';
    out += fmt17(b.b[i]);
    out += ',';
    out += std::to_string(b.multiplicity[i]);
    out += ',';
    out += i < static_cast<int>(gaps.size()) ? fmt17(gaps[i]) : "nan";
    out += '\n';
  }
  return out;
}

std::string jumps_json(const JumpReport& r) {
  using nlohmann::ordered_json;
  auto flag = [](const JumpFlag& f) {
    return ordered_json{{"t", f.t}, {"size", f.size}, {"persistence", f.persistence}};
  };
  ordered_json j;
  j["jump_factor"] = r.jump_factor;
  j["t_max"] = r.t_max;
  j["levels"] = ordered_json::array();
  for (std::size_t l = 0; l < r.dx.size(); ++l)
    j["levels"].push_back({{"dx", r.dx[l]}, {"dt", r.dt[l]}, {"max_increment", r.max_increment[l]}});
  j["flags"] = ordered_json::array();
  for (const auto& f : r.flags) j["flags"].push_back(flag(f));
  j["candidates"] = ordered_json::array();
  for (const auto& f : r.candidates) j["candidates"].push_back(flag(f));
  return j.dump(2) + "\n";
}

}  // namespace stopline
