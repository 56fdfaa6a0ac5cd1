// Copyright 2026 The she2d Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "she2d/spde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <mutex>
#include <sstream>

#include "she2d/errors.hpp"
#include "she2d/parallel.hpp"
#include "she2d/sde.hpp"

namespace she2d {
namespace {

constexpr double kBlowUp = 1e12;
const double kInvTwoSqrtPi = 0.5 / std::sqrt(kPi);

// FFTW's planner is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct FftwBuffer {
  T* data = nullptr;
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

double sigma_odd(const Nonlinearity& nl, double u) {
  return u < 0.0 ? -nl(-u) : nl(u);
}

// One realization of the field: spectral state plus scratch buffers.
class FieldSolver {
 public:
  FieldSolver(const SpdeConfig& cfg, const Nonlinearity& nl)
      : cfg_(cfg),
        nl_(nl),
        n_(static_cast<std::size_t>(cfg.n_grid)),
        n_real_(n_ * n_),
        n_cplx_(n_ * (n_ / 2 + 1)),
        u_(n_real_),
        noise_(n_real_),
        u_hat_(n_cplx_),
        work_(n_cplx_),
        k2_(n_cplx_),
        filter_(n_cplx_) {
    const int n = cfg.n_grid;
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      forward_ = fftw_plan_dft_r2c_2d(n, n, noise_.data, work_.data, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_2d(n, n, work_.data, noise_.data, FFTW_ESTIMATE);
    }
    if (forward_ == nullptr || backward_ == nullptr) {
      throw NumericalError("FFTW plan creation failed");
    }
    const double dk = 2.0 * kPi / cfg.L;
    const double m2 = cfg.mollifier() * cfg.mollifier();
    const std::size_t half = n_ / 2 + 1;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto si = static_cast<long>(i);
      const auto sn = static_cast<long>(n_);
      const double ky = dk * static_cast<double>(si < sn / 2 ? si : si - sn);
      for (std::size_t j = 0; j < half; ++j) {
        const double kx = dk * static_cast<double>(j);
        const double k2 = kx * kx + ky * ky;
        k2_[i * half + j] = k2;
        filter_[i * half + j] = std::exp(-m2 * k2 / 4.0) / static_cast<double>(n_real_);
      }
    }
    delta_ = cfg.attenuation_delta();
    reset(cfg.a);
  }

  ~FieldSolver() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  FieldSolver(const FieldSolver&) = delete;
  FieldSolver& operator=(const FieldSolver&) = delete;

  void reset(double a) {
    std::fill(u_.data, u_.data + n_real_, a);
    std::memset(u_hat_.data, 0, sizeof(fftw_complex) * n_cplx_);
    u_hat_.data[0][0] = a * static_cast<double>(n_real_);
    t_ = 0.0;
  }

  double t() const { return t_; }
  const double* field() const { return u_.data; }
  std::size_t size() const { return n_real_; }

  /// Advances to time t_end in equal steps no longer than cfg.dt().
  void advance_to(double t_end, RandomStream& stream) {
    const double span = t_end - t_;
    if (span <= 0.0) return;
    const auto steps = static_cast<std::size_t>(std::ceil(span / cfg_.dt() - 1e-9));
    const double h = span / static_cast<double>(steps);
    prepare_step(h);
    for (std::size_t s = 0; s < steps; ++s) step(h, stream);
    t_ = t_end;
  }

 private:
  void prepare_step(double h) {
    if (h == prepared_h_) return;
    decay_.resize(n_cplx_);
    gain_.resize(n_cplx_);
    for (std::size_t i = 0; i < n_cplx_; ++i) {
      const double x = k2_[i] * h;
      decay_[i] = std::exp(-0.5 * x);
      gain_[i] = x > 0.0 ? std::sqrt(-std::expm1(-x) / x) : 1.0;
    }
    prepared_h_ = h;
  }

  void step(double h, RandomStream& stream) {
    const double dx = cfg_.dx();
    const double scale = std::sqrt(h) / dx;  // sqrt(h / cell area)
    stream.fill_normal({noise_.data, n_real_});
    for (std::size_t i = 0; i < n_real_; ++i) noise_.data[i] *= scale;

    // Mollify: W^eps increment = G_{m^2/2} * white noise.
    fftw_execute_dft_r2c(forward_, noise_.data, work_.data);
    for (std::size_t i = 0; i < n_cplx_; ++i) {
      work_.data[i][0] *= filter_[i];
      work_.data[i][1] *= filter_[i];
    }
    fftw_execute_dft_c2r(backward_, work_.data, noise_.data);

    for (std::size_t i = 0; i < n_real_; ++i) {
      noise_.data[i] *= delta_ * sigma_odd(nl_, u_.data[i]);
    }
    fftw_execute_dft_r2c(forward_, noise_.data, work_.data);
    for (std::size_t i = 0; i < n_cplx_; ++i) {
      for (int c = 0; c < 2; ++c) {
        u_hat_.data[i][c] = decay_[i] * u_hat_.data[i][c] + gain_[i] * work_.data[i][c];
      }
    }

    std::memcpy(work_.data, u_hat_.data, sizeof(fftw_complex) * n_cplx_);
    fftw_execute_dft_c2r(backward_, work_.data, u_.data);
    const double inv = 1.0 / static_cast<double>(n_real_);
    double worst = 0.0;
    for (std::size_t i = 0; i < n_real_; ++i) {
      u_.data[i] *= inv;
      worst = std::max(worst, std::abs(u_.data[i]));
    }
    if (!(worst <= kBlowUp)) {
      std::ostringstream msg;
      msg << "SPDE blow-up near t=" << t_ << ": max |u| = " << worst
          << " exceeds " << kBlowUp;
      throw NumericalError(msg.str());
    }
  }

  const SpdeConfig& cfg_;
  const Nonlinearity& nl_;
  std::size_t n_, n_real_, n_cplx_;
  FftwBuffer<double> u_;
  FftwBuffer<double> noise_;
  FftwBuffer<fftw_complex> u_hat_;
  FftwBuffer<fftw_complex> work_;
  std::vector<double> k2_, filter_, decay_, gain_;
  double prepared_h_ = -1.0;
  double delta_ = 0.0;
  double t_ = 0.0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

void require_times(const std::vector<double>& times, double T) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0 && times[i] <= T * (1.0 + 1e-12))) {
      std::ostringstream msg;
      msg << "sample time " << times[i] << " outside [0, T=" << T << "]";
      throw DomainError(msg.str());
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw ConfigError("sample times must be strictly ascending");
    }
  }
}

// Runs one realization and hands the field to visit(k, field) at times[k].
void run_realization(const SpdeConfig& cfg, const Nonlinearity& nl,
                     const std::vector<double>& times, const SeededRng& address,
                     const std::function<void(std::size_t, const double*)>& visit) {
  FieldSolver solver(cfg, nl);
  RandomStream stream(address);
  for (std::size_t k = 0; k < times.size(); ++k) {
    solver.advance_to(times[k], stream);
    visit(k, solver.field());
  }
}

void require_subcritical_nl(const Nonlinearity& nl) { require_subcritical(nl.beta()); }

}  // namespace

void SpdeConfig::validate() const {
  std::ostringstream msg;
  if (!(L > 0.0)) throw ConfigError("L must be positive");
  if (n_grid < 2 || n_grid % 2 != 0) throw ConfigError("n_grid must be even and >= 2");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(a >= 0.0)) throw ConfigError("a must be >= 0");
  if (!(dt_factor > 0.0 && dt_factor <= 0.25)) {
    throw ConfigError("dt_factor must lie in (0, 0.25]");
  }
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (mollifier() < 2.0 * dx() * (1.0 - 1e-12)) {
    msg << "mollifier " << mollifier() << " is not resolved: need >= 2 L / n_grid = "
        << 2.0 * dx();
    throw ConfigError(msg.str());
  }
  if (L < 20.0 * std::sqrt(T) * (1.0 - 1e-12)) {
    msg << "torus too small: L=" << L << " < 20 sqrt(T)=" << 20.0 * std::sqrt(T);
    throw ConfigError(msg.str());
  }
  if (attenuation == Attenuation::Logarithmic && !(eps < 1.0)) {
    throw ConfigError("logarithmic attenuation needs eps < 1");
  }
  if (attenuation == Attenuation::Custom && !(delta >= 0.0)) {
    throw ConfigError("custom delta must be >= 0");
  }
}

double SpdeConfig::mollifier() const {
  return scale == SpdeScale::Macroscopic ? eps : 1.0;
}

double SpdeConfig::attenuation_delta() const {
  if (attenuation == Attenuation::Custom) return delta;
  return 1.0 / std::sqrt(std::log(1.0 / eps));
}

double SpdeConfig::time_of_q(double q) const {
  return scale == SpdeScale::Macroscopic ? std::pow(eps, 2.0 - q)
                                         : std::pow(eps, -q);
}

SpdeScale spde_scale_from_string(const std::string& name) {
  if (name == "macroscopic") return SpdeScale::Macroscopic;
  if (name == "microscopic") return SpdeScale::Microscopic;
  throw ConfigError("unknown scale '" + name + "' (expected macroscopic or microscopic)");
}

std::string to_string(SpdeScale scale) {
  return scale == SpdeScale::Macroscopic ? "macroscopic" : "microscopic";
}

std::vector<FieldSnapshot> simulate_spde(const SpdeConfig& cfg,
                                         const Nonlinearity& nl,
                                         const std::vector<double>& sample_times,
                                         const SeededRng& rng) {
  cfg.validate();
  require_subcritical_nl(nl);
  require_times(sample_times, cfg.T);
  std::vector<FieldSnapshot> out;
  run_realization(cfg, nl, sample_times, rng, [&](std::size_t k, const double* u) {
    FieldSnapshot snap;
    snap.t = sample_times[k];
    snap.n_grid = cfg.n_grid;
    snap.values.assign(u, u + static_cast<std::size_t>(cfg.n_grid) * cfg.n_grid);
    snap.negative_count = std::count_if(snap.values.begin(), snap.values.end(),
                                        [](double v) { return v < 0.0; });
    out.push_back(std::move(snap));
  });
  return out;
}

SpdeMoments spde_moments(const SpdeConfig& cfg, const Nonlinearity& nl,
                         const std::vector<double>& times,
                         std::int64_t n_realizations, const SeededRng& rng) {
  cfg.validate();
  require_subcritical_nl(nl);
  require_times(times, cfg.T);
  if (n_realizations < 2) throw ConfigError("need at least 2 realizations");
  const auto n_real = static_cast<std::size_t>(n_realizations);
  const std::size_t nt = times.size();
  std::vector<double> first(n_real * nt), second(n_real * nt);
  std::vector<std::int64_t> negatives(n_real, 0);

  parallel_for(n_real, [&](std::size_t r) {
    run_realization(cfg, nl, times, rng.derive(r), [&](std::size_t k, const double* u) {
      const std::size_t cells = static_cast<std::size_t>(cfg.n_grid) * cfg.n_grid;
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < cells; ++i) {
        s1 += u[i];
        s2 += u[i] * u[i];
        if (u[i] < 0.0) ++negatives[r];
      }
      first[k * n_real + r] = s1 / static_cast<double>(cells);
      second[k * n_real + r] = s2 / static_cast<double>(cells);
    });
  });

  SpdeMoments out;
  out.times = times;
  for (std::size_t k = 0; k < nt; ++k) {
    out.mean.push_back(mean_with_stderr({&first[k * n_real], n_real}));
    out.second_moment.push_back(mean_with_stderr({&second[k * n_real], n_real}));
  }
  for (auto c : negatives) out.negative_entries += c;
  out.total_entries = static_cast<std::int64_t>(n_real * nt) * cfg.n_grid * cfg.n_grid;
  return out;
}

std::vector<double> volterra_second_moment(double beta, double delta,
                                           const std::vector<double>& t_grid) {
  if (!(beta >= 0.0) || !(delta >= 0.0)) {
    throw DomainError("beta and delta must be >= 0");
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0) || (i > 0 && t_grid[i] < t_grid[i - 1])) {
      throw DomainError("t_grid must be nonnegative and ascending");
    }
  }
  if (t_grid.empty()) return {};
  const double lambda = delta * delta * beta * beta / (4.0 * kPi);
  if (lambda == 0.0) return std::vector<double>(t_grid.size(), 1.0);
  const double t_max = t_grid.back();
  if (lambda * std::log1p(2.0 * t_max) >= 1.0) {
    std::ostringstream msg;
    msg << "Volterra window violated: lambda log(1 + 2 t_max) >= 1 (critical time "
        << 0.5 * std::expm1(1.0 / lambda) << ", t_max " << t_max << ")";
    throw DomainError(msg.str());
  }

  // Internal grid with spacing proportional to t + 1/2, plus every t_grid point.
  std::vector<double> s{0.0};
  while (s.back() < t_max) s.push_back(s.back() + 2e-3 * (s.back() + 0.5));
  s.back() = std::min(s.back(), t_max);
  for (double t : t_grid) s.push_back(t);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end(),
                      [](double x, double y) { return std::abs(x - y) <= 1e-13 * (1.0 + y); }),
          s.end());

  const std::size_t m = s.size();
  std::vector<double> f(m, 1.0);
  for (std::size_t n = 1; n < m; ++n) {
    const double c = s[n] + 0.5;
    double acc = 0.0;
    double b_last = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = s[j + 1] - s[j];
      // Exact integrals of 1/(c - s) and (s - s_j)/(h (c - s)) over [s_j, s_j+1].
      const double A = std::log((c - s[j]) / (c - s[j + 1]));
      const double B = ((c - s[j]) * A - h) / h;
      acc += f[j] * (A - B);
      if (j + 1 < n) {
        acc += f[j + 1] * B;
      } else {
        b_last = B;
      }
    }
    f[n] = (1.0 + lambda * acc) / (1.0 - lambda * b_last);
  }

  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    auto it = std::lower_bound(s.begin(), s.end(), t - 1e-13 * (1.0 + t));
    out.push_back(f[static_cast<std::size_t>(it - s.begin())]);
  }
  return out;
}

double volterra_asymptotic(double beta, double delta, double t) {
  const double x = delta * delta * beta * beta * std::log(t) / (4.0 * kPi);
  if (x >= 1.0) throw DomainError("asymptotic form needs delta^2 beta^2 log t / 4 pi < 1");
  return 1.0 / (1.0 - x);
}

std::vector<JEpsEstimate> estimate_j_eps(const SpdeConfig& cfg_in,
                                         const Nonlinearity& nl,
                                         const std::vector<double>& q_list,
                                         double a, std::int64_t n_realizations,
                                         const SeededRng& rng) {
  SpdeConfig cfg = cfg_in;
  cfg.a = a;
  cfg.validate();
  require_subcritical_nl(nl);
  if (n_realizations < 2) throw ConfigError("need at least 2 realizations");
  if (q_list.empty()) throw ConfigError("q_list is empty");

  std::vector<double> times;
  for (double q : q_list) {
    if (!(q <= kMaxQ)) throw DomainError("q values must be <= 2");
    const double t = cfg.time_of_q(q);
    if (t > cfg.T * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "q=" << q << " maps to t=" << t << " beyond the horizon T=" << cfg.T;
      throw DomainError(msg.str());
    }
    times.push_back(std::min(t, cfg.T));
  }
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const auto stride = static_cast<std::size_t>(
      std::max(1.0, std::ceil(4.0 * cfg.mollifier() / cfg.dx() - 1e-9)));
  const auto n = static_cast<std::size_t>(cfg.n_grid);
  const auto n_real = static_cast<std::size_t>(n_realizations);
  const std::size_t nt = sorted.size();
  std::vector<double> per_real(nt * n_real);

  parallel_for(n_real, [&](std::size_t r) {
    run_realization(cfg, nl, sorted, rng.derive(r), [&](std::size_t k, const double* u) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t y = 0; y < n; y += stride) {
        for (std::size_t x = 0; x < n; x += stride) {
          const double s = sigma_odd(nl, u[y * n + x]);
          sum += s * s;
          ++count;
        }
      }
      per_real[k * n_real + r] = sum / static_cast<double>(count);
    });
  });

  std::vector<JEpsEstimate> out;
  for (std::size_t i = 0; i < q_list.size(); ++i) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), times[i]) - sorted.begin());
    const MeanEstimate m = mean_with_stderr({&per_real[k * n_real], n_real});
    JEpsEstimate e;
    e.q = q_list[i];
    e.t = times[i];
    e.j_eps = std::sqrt(std::max(m.mean, 0.0)) * kInvTwoSqrtPi;
    e.std_error = m.mean > 0.0 ? m.std_error / (2.0 * std::sqrt(m.mean)) * kInvTwoSqrtPi : 0.0;
    out.push_back(e);
  }
  return out;
}

double ew_kernel_integral(const GaussianBump& g, double T, double L) {
  if (!(T >= 0.0) || !(L > 0.0) || !(g.width > 0.0)) {
    throw DomainError("ew_kernel_integral needs T >= 0, L > 0, width > 0");
  }
  // Sum over k in (2 pi / L) Z^2 of |g_hat(k)|^2 (1 - exp(-k^2 T)) / k^2 / L^2,
  // g_hat(k) = 2 pi w^2 exp(-w^2 k^2 / 2); the k = 0 term is T |g_hat(0)|^2 / L^2.
  const double w2 = g.width * g.width;
  const double dk = 2.0 * kPi / L;
  const double g0 = 2.0 * kPi * w2;
  const auto m_max = static_cast<long>(std::ceil(12.0 / (g.width * dk))) + 1;
  double sum = 0.0;
  for (long i = -m_max; i <= m_max; ++i) {
    for (long j = -m_max; j <= m_max; ++j) {
      const double k2 = dk * dk * static_cast<double>(i * i + j * j);
      const double ghat2 = g0 * g0 * std::exp(-w2 * k2);
      sum += k2 > 0.0 ? ghat2 * (-std::expm1(-k2 * T)) / k2 : ghat2 * T;
    }
  }
  return sum / (L * L);
}

EwResult ew_variance_functional(const SpdeConfig& cfg, const Nonlinearity& nl,
                                const GaussianBump& g, const DecouplingGrid& J,
                                std::int64_t n_realizations, const SeededRng& rng,
                                std::int64_t xi_paths) {
  cfg.validate();
  require_subcritical_nl(nl);
  if (n_realizations < 2) throw ConfigError("need at least 2 realizations");
  if (!(cfg.eps < 1.0)) throw ConfigError("eps must be < 1");

  const bool micro = cfg.scale == SpdeScale::Microscopic;
  const double to_macro = micro ? cfg.eps : 1.0;  // macro length per torus length
  const double L_macro = cfg.L * to_macro;
  const double T_macro = cfg.T * to_macro * to_macro;
  const double margin = 6.0 * g.width;
  if (!(g.width > 0.0) || std::min({g.cx, L_macro - g.cx, g.cy, L_macro - g.cy}) < margin) {
    std::ostringstream msg;
    msg << "test function must sit at least 6 widths inside the torus [0, " << L_macro
        << ")^2";
    throw DomainError(msg.str());
  }

  const auto n = static_cast<std::size_t>(cfg.n_grid);
  const double h = cfg.dx() * to_macro;
  std::vector<double> weight(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = static_cast<double>(x) * h - g.cx;
      const double py = static_cast<double>(y) * h - g.cy;
      weight[y * n + x] = std::exp(-(px * px + py * py) / (2.0 * g.width * g.width)) * h * h;
    }
  }

  const auto n_real = static_cast<std::size_t>(n_realizations);
  const double amplitude = std::sqrt(std::log(1.0 / cfg.eps));
  std::vector<double> U(n_real);
  const SeededRng field_rng = rng.derive(0);
  parallel_for(n_real, [&](std::size_t r) {
    run_realization(cfg, nl, {cfg.T}, field_rng.derive(r), [&](std::size_t, const double* u) {
      double s = 0.0;
      for (std::size_t i = 0; i < n * n; ++i) s += (u[i] - cfg.a) * weight[i];
      U[r] = amplitude * s;
    });
  });
  const MeanEstimate mu = mean_with_stderr(U);
  std::vector<double> dev2(n_real);
  for (std::size_t r = 0; r < n_real; ++r) dev2[r] = (U[r] - mu.mean) * (U[r] - mu.mean);
  const MeanEstimate var = mean_with_stderr(dev2);

  EwResult out;
  const double nn = static_cast<double>(n_real);
  out.empirical_variance = var.mean * nn / (nn - 1.0);
  out.empirical_std_error = var.std_error * nn / (nn - 1.0);

  SdeParams p;
  p.a = cfg.a;
  p.Q = kMaxQ;
  p.dt = 1e-3;
  p.n_paths = xi_paths;
  const PathEnsemble ens = simulate_xi(J, p, rng.derive(1));
  double s2 = 0.0;
  for (double x : ens.terminal) s2 += nl(x) * nl(x);
  out.sigma2_mean = s2 / static_cast<double>(ens.terminal.size());
  out.kernel_integral = ew_kernel_integral(g, T_macro, L_macro);
  out.limit_prediction = out.sigma2_mean * out.kernel_integral;
  return out;
}

}  // namespace she2d
