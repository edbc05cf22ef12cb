#include "dualwave/fokker_planck.hpp"

#include <algorithm>
#include <cmath>

#include "dualwave/stats.hpp"

namespace dualwave {

CellGrid cell_grid(const Domain& domain, std::size_t cells) {
  if (cells < 2) throw ModelError("grid needs at least two cells per axis");
  CellGrid g;
  g.dim = domain.dim;
  g.lo = domain.lo;
  g.hi = domain.hi;
  g.cells = {cells, domain.dim == 2 ? cells : 1};
  return g;
}

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

namespace {

void normalize(DensityField& f) {
  const double m = f.mass();
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericError("density has no mass on the grid");
  for (double& v : f.values) v /= m;
}

void check_same_grid(const CellGrid& a, const CellGrid& b) {
  if (a.dim != b.dim || a.cells != b.cells || a.lo != b.lo || a.hi != b.hi)
    throw ModelError("density fields live on different grids");
}

}  // namespace

DensityField density_from_function(const CellGrid& grid, const std::function<double(const Point&)>& f,
                                   bool normalize_mass) {
  DensityField out;
  out.grid = grid;
  out.values.resize(grid.size());
  for (std::size_t iy = 0; iy < grid.cells[1]; ++iy)
    for (std::size_t ix = 0; ix < grid.cells[0]; ++ix) out.values[grid.index(ix, iy)] = f(grid.point(ix, iy));
  if (normalize_mass) normalize(out);
  return out;
}

DensityField psi_density(const SpectralSystem& sys, const PhaseVector& theta, double t,
                         const CellGrid& grid) {
  DensityField out =
      density_from_function(grid, [&](const Point& q) { return std::norm(sys.psi(theta, t, q)); });
  out.t = t;
  return out;
}

DensityField mixture_density(const SpectralSystem& sys, const CellGrid& grid) {
  const std::size_t n = sys.level_count();
  std::vector<Complex> b(n);
  return density_from_function(grid, [&](const Point& q) {
    sys.level_amplitudes(0.0, q, b);
    double s = 0.0;
    for (const auto& v : b) s += std::norm(v);
    return s;
  });
}

DensityField uniform_density(const CellGrid& grid) {
  return density_from_function(grid, [](const Point&) { return 1.0; });
}

DensityField gaussian_density(const CellGrid& grid, Point center, Vec2 std_dev) {
  return density_from_function(grid, [&](const Point& q) {
    double e = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      const double z = (q[k] - center[k]) / std_dev[k];
      e += 0.5 * z * z;
    }
    return std::exp(-e);
  });
}

double l1_distance(const DensityField& a, const DensityField& b) {
  check_same_grid(a.grid, b.grid);
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.grid.cell_volume();
}

// ---------------------------------------------------------------- oracle

namespace {

/// Bernoulli function z/(e^z - 1).
double bernoulli(double z) {
  if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
  if (z > 700.0) return z * std::exp(-z);
  if (z < -700.0) return -z;
  return z / std::expm1(z);
}

/// Face drifts along each axis: faces[axis][line * (n_axis - 1) + i] is the
/// face between cells i and i+1 of the given line.
struct FaceTable {
  std::array<std::vector<double>, 2> faces;
};

FaceTable face_table(const DriftField& field, const CellGrid& g, double t) {
  FaceTable ft;
  const auto* spectral = dynamic_cast<const SpectralDrift*>(&field);
  std::vector<double> log_density;
  if (spectral && spectral->diffusion()[0] > 0.0) {
    // Cache ln|ψ|² at the centers; each face then needs one current velocity.
    log_density.resize(g.size());
    const auto& sys = spectral->system();
    for (std::size_t iy = 0; iy < g.cells[1]; ++iy)
      for (std::size_t ix = 0; ix < g.cells[0]; ++ix)
        log_density[g.index(ix, iy)] =
            std::log(std::max(std::norm(sys.psi(spectral->phases(), t, g.point(ix, iy))), 1e-300));
  }
  for (int axis = 0; axis < g.dim; ++axis) {
    const std::size_t n = g.cells[axis];
    const std::size_t lines = g.size() / n;
    auto& out = ft.faces[axis];
    out.resize(lines * (n - 1));
    for (std::size_t line = 0; line < lines; ++line) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t il, ir;
        Point left, right;
        if (axis == 0) {
          il = g.index(i, line);
          ir = g.index(i + 1, line);
          left = g.point(i, line);
          right = g.point(i + 1, line);
        } else {
          il = g.index(line, i);
          ir = g.index(line, i + 1);
          left = g.point(line, i);
          right = g.point(line, i + 1);
        }
        double v;
        if (!log_density.empty()) {
          Point mid = left;
          mid[axis] = 0.5 * (left[axis] + right[axis]);
          v = current_velocity(spectral->system(), spectral->phases(), t, mid)[axis] +
              0.5 * spectral->diffusion()[axis] * (log_density[ir] - log_density[il]) / g.h(axis);
        } else {
          v = field.face_velocity(axis, left, right, t);
        }
        out[line * (n - 1) + i] = v;
      }
    }
  }
  return ft;
}

bool time_independent(const DriftField& field) {
  if (dynamic_cast<const ConstantDrift*>(&field)) return true;
  if (const auto* s = dynamic_cast<const SpectralDrift*>(&field)) return s->system().level_count() == 1;
  return false;
}

/// One backward-Euler sweep along `axis` for every grid line.
void implicit_sweep(std::vector<double>& rho, const CellGrid& g, int axis, const std::vector<double>& faces,
                    double diffusion, double dt) {
  const std::size_t n = g.cells[axis];
  const std::size_t lines = g.size() / n;
  const double h = g.h(axis);
  const double r = dt / h;
  const double half_d = 0.5 * diffusion;
  std::vector<double> a(n - 1), c(n - 1), lower(n), diag(n), upper(n), rhs(n), cp(n), x(n);
  for (std::size_t line = 0; line < lines; ++line) {
    // J_{i+1/2} = a_i ρ_i - c_i ρ_{i+1}
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double v = faces[line * (n - 1) + i];
      if (half_d > 0.0) {
        const double z = v * h / half_d;
        a[i] = half_d / h * bernoulli(-z);
        c[i] = half_d / h * bernoulli(z);
      } else {
        a[i] = std::max(v, 0.0);
        c[i] = std::max(-v, 0.0);
      }
    }
    auto at = [&](std::size_t i) -> double& {
      return axis == 0 ? rho[g.index(i, line)] : rho[g.index(line, i)];
    };
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = 1.0 + r * ((i + 1 < n ? a[i] : 0.0) + (i > 0 ? c[i - 1] : 0.0));
      upper[i] = i + 1 < n ? -r * c[i] : 0.0;
      lower[i] = i > 0 ? -r * a[i - 1] : 0.0;
      rhs[i] = at(i);
    }
    // Thomas algorithm; the matrix is a column-diagonally dominant M-matrix.
    cp[0] = upper[0] / diag[0];
    x[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double m = diag[i] - lower[i] * cp[i - 1];
      cp[i] = upper[i] / m;
      x[i] = (rhs[i] - lower[i] * x[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
    for (std::size_t i = 0; i < n; ++i) at(i) = x[i];
  }
}

void check_health(const DensityField& f, double mass0) {
  double lowest = 0.0, peak = 0.0;
  for (double v : f.values) {
    if (!std::isfinite(v)) throw NumericError("Fokker–Planck density became non-finite; reduce dt");
    lowest = std::min(lowest, v);
    peak = std::max(peak, v);
  }
  if (-lowest * f.grid.size() * f.grid.cell_volume() > 1e-6)
    throw NumericError("Fokker–Planck density went negative; reduce dt");
  if (std::abs(f.mass() - mass0) > 1e-6) throw NumericError("Fokker–Planck mass drifted; reduce dt");
}

}  // namespace

std::vector<DensityField> fp_series(const DriftField& field, const DensityField& rho0,
                                    const std::vector<double>& checkpoints, double dt) {
  if (!(dt > 0.0)) throw ModelError("dt must be positive");
  if (rho0.grid.dim != field.dimension()) throw ModelError("density and drift dimensions differ");
  const double mass0 = rho0.mass();
  if (std::abs(mass0 - 1.0) > 1e-6) throw ModelError("initial density must be normalized");
  const CellGrid& g = rho0.grid;
  const Vec2 d = field.diffusion();
  const bool frozen = time_independent(field);
  FaceTable cached;
  if (frozen) cached = face_table(field, g, rho0.t);

  DensityField cur = rho0;
  std::vector<DensityField> out;
  out.reserve(checkpoints.size());
  for (double target : checkpoints) {
    if (target < cur.t - 1e-12) throw ModelError("checkpoints must be non-decreasing");
    const std::size_t n = step_count(std::max(0.0, target - cur.t), dt);
    const double t0 = cur.t;
    for (std::size_t j = 0; j < n; ++j) {
      const double t_next = (j + 1 == n) ? target : t0 + static_cast<double>(j + 1) * dt;
      const double h = t_next - cur.t;
      const FaceTable ft = frozen ? FaceTable{} : face_table(field, g, t_next);
      const FaceTable& use = frozen ? cached : ft;
      for (int axis = 0; axis < g.dim; ++axis) implicit_sweep(cur.values, g, axis, use.faces[axis], d[axis], h);
      cur.t = t_next;
    }
    check_health(cur, mass0);
    out.push_back(cur);
  }
  return out;
}

DensityField fp_oracle(const DriftField& field, const DensityField& rho0, double horizon, double dt) {
  return fp_series(field, rho0, {rho0.t + horizon}, dt).front();
}

// ---------------------------------------------------------------- comparisons

DensityField histogram_density(const std::vector<Point>& samples, const CellGrid& grid) {
  DensityField out;
  out.grid = grid;
  out.values.assign(grid.size(), 0.0);
  if (samples.empty()) return out;
  auto bin = [&](int k, double x) {
    const double u = (x - grid.lo[k]) / grid.h(k);
    const auto i = static_cast<long long>(std::floor(u));
    return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(grid.cells[k]) - 1));
  };
  for (const auto& q : samples) {
    const std::size_t ix = bin(0, q[0]);
    const std::size_t iy = grid.dim == 2 ? bin(1, q[1]) : 0;
    out.values[grid.index(ix, iy)] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(samples.size()) * grid.cell_volume());
  for (double& v : out.values) v *= scale;
  return out;
}

DensityField rebin(const DensityField& field, std::size_t bins) {
  const CellGrid& g = field.grid;
  for (int k = 0; k < g.dim; ++k)
    if (bins == 0 || g.cells[k] % bins != 0) throw ModelError("rebin: cell count not divisible by bin count");
  DensityField out;
  out.grid = g;
  out.grid.cells = {bins, g.dim == 2 ? bins : 1};
  out.values.assign(out.grid.size(), 0.0);
  out.t = field.t;
  const std::size_t fx = g.cells[0] / bins, fy = g.dim == 2 ? g.cells[1] / bins : 1;
  for (std::size_t iy = 0; iy < g.cells[1]; ++iy)
    for (std::size_t ix = 0; ix < g.cells[0]; ++ix)
      out.values[out.grid.index(ix / fx, iy / fy)] += field.values[g.index(ix, iy)];
  const double scale = 1.0 / static_cast<double>(fx * fy);
  for (double& v : out.values) v *= scale;
  return out;
}

namespace {

/// Exact cumulative mass of a piecewise-constant density (bilinear in 2-D).
class Cumulative {
 public:
  explicit Cumulative(const DensityField& f) : g_(f.grid) {
    const std::size_t nx = g_.cells[0], ny = g_.cells[1];
    table_.assign((nx + 1) * (ny + 1), 0.0);
    const double vol = g_.cell_volume();
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix)
        at(ix + 1, iy + 1) = f.values[g_.index(ix, iy)] * vol + at(ix, iy + 1) + at(ix + 1, iy) - at(ix, iy);
    total_ = at(nx, ny);
  }

  /// Mass in (-∞, x] × (-∞, y], normalized by the total.
  double operator()(double x, double y) const {
    const auto [ix, fx] = locate(0, x);
    const auto [iy, fy] = g_.dim == 2 ? locate(1, y) : std::pair<std::size_t, double>{1, 0.0};
    const std::size_t ix1 = std::min(ix + 1, g_.cells[0]);
    const std::size_t iy1 = std::min(iy + 1, g_.cells[1]);
    const double v = (1 - fx) * (1 - fy) * at(ix, iy) + fx * (1 - fy) * at(ix1, iy) +
                     (1 - fx) * fy * at(ix, iy1) + fx * fy * at(ix1, iy1);
    return v / total_;
  }

 private:
  std::pair<std::size_t, double> locate(int k, double x) const {
    const double u = (x - g_.lo[k]) / g_.h(k);
    if (u <= 0.0) return {0, 0.0};
    if (u >= static_cast<double>(g_.cells[k])) return {g_.cells[k], 0.0};
    const double fl = std::floor(u);
    return {static_cast<std::size_t>(fl), u - fl};
  }
  double& at(std::size_t ix, std::size_t iy) { return table_[iy * (g_.cells[0] + 1) + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return table_[iy * (g_.cells[0] + 1) + ix]; }

  CellGrid g_;
  std::vector<double> table_;
  double total_ = 1.0;
};

}  // namespace

QeDistance qe_distance(const std::vector<Point>& samples, const DensityField& reference, std::size_t bins) {
  if (samples.empty()) throw ModelError("qe_distance needs samples");
  if (bins == 0) throw ModelError("bin count must be positive");
  const CellGrid& g = reference.grid;
  const Cumulative cdf(reference);
  QeDistance out;
  out.n = samples.size();
  out.bins = bins;
  const double n = static_cast<double>(samples.size());

  if (g.dim == 1) {
    std::vector<double> u;
    u.reserve(samples.size());
    for (const auto& q : samples) u.push_back(cdf(q[0], 0.0));
    out.ks = stats::ks_uniform(std::move(u));
    out.p_value = stats::ks_p_value(out.ks, samples.size());
  } else {
    // Fasano–Franceschini: largest quadrant discrepancy over sample origins.
    double d = 0.0;
    for (const auto& o : samples) {
      double counts[4] = {0, 0, 0, 0};
      for (const auto& q : samples) {
        if (&q == &o) continue;
        const int qx = q[0] > o[0] ? 1 : 0, qy = q[1] > o[1] ? 1 : 0;
        counts[qx + 2 * qy] += 1.0;
      }
      const double fx = cdf(o[0], g.hi[1]), fy = cdf(g.hi[0], o[1]), fxy = cdf(o[0], o[1]);
      const double model[4] = {fxy, fy - fxy, fx - fxy, 1.0 - fx - fy + fxy};
      for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(counts[k] / n - model[k]));
    }
    double mx = 0, my = 0;
    for (const auto& q : samples) {
      mx += q[0];
      my += q[1];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& q : samples) {
      sxx += (q[0] - mx) * (q[0] - mx);
      syy += (q[1] - my) * (q[1] - my);
      sxy += (q[0] - mx) * (q[1] - my);
    }
    const double r = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    out.ks = d;
    out.p_value = stats::ks2d_p_value(d, samples.size(), r);
  }

  // Histogram L1 against exact reference bin masses.
  CellGrid hg = g;
  hg.cells = {bins, g.dim == 2 ? bins : 1};
  const DensityField hist = histogram_density(samples, hg);
  double l1 = 0.0;
  for (std::size_t iy = 0; iy < hg.cells[1]; ++iy) {
    for (std::size_t ix = 0; ix < hg.cells[0]; ++ix) {
      const double x0 = hg.lo[0] + static_cast<double>(ix) * hg.h(0), x1 = x0 + hg.h(0);
      double mass;
      if (g.dim == 1) {
        mass = cdf(x1, 0.0) - cdf(x0, 0.0);
      } else {
        const double y0 = hg.lo[1] + static_cast<double>(iy) * hg.h(1), y1 = y0 + hg.h(1);
        mass = cdf(x1, y1) - cdf(x0, y1) - cdf(x1, y0) + cdf(x0, y0);
      }
      l1 += std::abs(hist.values[hg.index(ix, iy)] * hg.cell_volume() - mass);
    }
  }
  out.l1 = l1;
  return out;
}

}  // namespace dualwave
