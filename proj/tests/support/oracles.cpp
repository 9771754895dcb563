#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "msenc/errors.hpp"

namespace msenc::testing {

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  double u = rng.next_double();
  return lo + std::int64_t(u * double(hi - lo + 1));
}

PeriodTable random_table(Rng& rng, const std::string& period, std::int64_t lo, std::int64_t hi) {
  std::array<std::int64_t, 8> counts{};
  for (const Pattern& p : kObservedPatterns)
    counts[std::size_t(p.index())] = uniform_int(rng, lo, hi);
  return PeriodTable(period, counts);
}

StackedTable random_stage_b(Rng& rng) {
  PeriodTable base = random_table(rng, "t0", 20, 2000);
  std::vector<AggregateEntry> entries = {
      {PatternQuery{Flag::One, Flag::One, Flag::Any}, uniform_int(rng, 30, 3000)},
      {PatternQuery{Flag::One, Flag::Zero, Flag::Any}, uniform_int(rng, 30, 3000)},
      {PatternQuery{Flag::Zero, Flag::One, Flag::Any}, uniform_int(rng, 30, 3000)}};
  return StackedTable(std::move(base), AggregatedCounts("t1", Stage::B, std::move(entries)));
}

StackedTable random_stage_a(Rng& rng) {
  PeriodTable base = random_table(rng, "t0", 20, 2000);
  std::vector<AggregateEntry> entries = {
      {PatternQuery{Flag::One, Flag::Any, Flag::Any}, uniform_int(rng, 50, 5000)}};
  return StackedTable(std::move(base), AggregatedCounts("t1", Stage::A, std::move(entries)));
}

double saturated_m000_closed_form(const PeriodTable& t) {
  auto n = [&](int a, int b, int c) { return double(t.count(Pattern{a != 0, b != 0, c != 0})); };
  return n(1, 1, 1) * n(1, 0, 0) * n(0, 1, 0) * n(0, 0, 1) /
         (n(1, 1, 0) * n(1, 0, 1) * n(0, 1, 1));
}

double ratio_adjusted_dse_nhat(const StackedTable& stage_b) {
  const PeriodTable& t0 = stage_b.base;
  const auto& agg = std::get<AggregatedCounts>(stage_b.current);
  double n11_t1 = double(agg.ab_total(true, true));
  double n10_t1 = double(agg.ab_total(true, false));
  double n01_t1 = double(agg.ab_total(false, true));

  double m000_t0 = saturated_m000_closed_form(t0);
  double m00p_t0 = double(t0.count(Pattern{false, false, true})) + m000_t0;
  double n11_t0 = double(marginal(t0, PatternQuery{Flag::One, Flag::One, Flag::Any}));
  double n10_t0 = double(marginal(t0, PatternQuery{Flag::One, Flag::Zero, Flag::Any}));
  double n01_t0 = double(marginal(t0, PatternQuery{Flag::Zero, Flag::One, Flag::Any}));

  double m00p_t1 = (n10_t1 * n01_t1 / n11_t1) * (n11_t0 * m00p_t0) / (n10_t0 * n01_t0);
  return n11_t1 + n10_t1 + n01_t1 + m00p_t1;
}

namespace {

struct SimplexPoint {
  std::vector<double> x;
  double f = 0.0;
};

std::vector<double> nelder_mead_once(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& start, double step,
                                     int max_evaluations, double f_tol, double x_tol,
                                     int* evaluations) {
  const std::size_t n = start.size();
  std::vector<SimplexPoint> simplex(n + 1);
  simplex[0] = {start, f(start)};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = start;
    x[i] += step;
    simplex[i + 1] = {x, f(x)};
  }
  *evaluations += int(n) + 1;

  auto order = [&] {
    std::sort(simplex.begin(), simplex.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
  };
  order();

  while (*evaluations < max_evaluations) {
    double spread = simplex.back().f - simplex.front().f;
    double size = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      size = std::max(size, std::abs(simplex.back().x[i] - simplex.front().x[i]));
    if (spread < f_tol * (1.0 + std::abs(simplex.front().f)) && size < x_tol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i].x[j];
    }
    for (double& c : centroid) c /= double(n);

    auto along = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = centroid[j] + coef * (simplex.back().x[j] - centroid[j]);
      return x;
    };

    std::vector<double> reflected = along(-1.0);
    double fr = f(reflected);
    ++*evaluations;
    if (fr < simplex.front().f) {
      std::vector<double> expanded = along(-2.0);
      double fe = f(expanded);
      ++*evaluations;
      simplex.back() = fe < fr ? SimplexPoint{expanded, fe} : SimplexPoint{reflected, fr};
    } else if (fr < simplex[n - 1].f) {
      simplex.back() = {reflected, fr};
    } else {
      std::vector<double> contracted = along(fr < simplex.back().f ? -0.5 : 0.5);
      double fc = f(contracted);
      ++*evaluations;
      if (fc < std::min(fr, simplex.back().f)) {
        simplex.back() = {contracted, fc};
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            simplex[i].x[j] = simplex[0].x[j] + 0.5 * (simplex[i].x[j] - simplex[0].x[j]);
          simplex[i].f = f(simplex[i].x);
        }
        *evaluations += int(n);
      }
    }
    order();
  }
  return simplex.front().x;
}

// Axis-wise quadratic polish; tightens the optimum well beyond simplex
// resolution for smooth objectives.
std::vector<double> axis_polish(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h0, int sweeps) {
  double h = h0;
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      double f0 = f(x), fp = f(xp), fm = f(xm);
      double denom = fp - 2.0 * f0 + fm;
      if (denom > 0.0) {
        double delta = -0.5 * h * (fp - fm) / denom;
        delta = std::clamp(delta, -2.0 * h, 2.0 * h);
        std::vector<double> cand = x;
        cand[j] += delta;
        if (f(cand) <= f0) x = cand;
      } else if (fp < f0) {
        x = xp;
      } else if (fm < f0) {
        x = xm;
      }
    }
    h *= 0.35;
  }
  return x;
}

}  // namespace

std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, const NelderMeadOptions& options) {
  int evaluations = 0;
  std::vector<double> best = start;
  double best_f = f(best);
  double step = options.initial_step;
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> x =
        nelder_mead_once(f, best, step, options.max_evaluations, options.f_tolerance,
                         options.x_tolerance, &evaluations);
    double fx = f(x);
    if (fx < best_f) {
      best = x;
      best_f = fx;
    }
    step *= 0.2;
    if (evaluations >= options.max_evaluations) break;
  }
  return axis_polish(f, best, 1e-4, 14);
}

namespace {

double pattern_eta(const std::vector<double>& theta, const std::vector<int>& term_indices,
                   Pattern p) {
  // theta[0] is the intercept; term indices: 0..5 = A,B,C,AB,AC,BC.
  double eta = theta[0];
  for (std::size_t k = 0; k < term_indices.size(); ++k) {
    double ind = 0.0;
    switch (term_indices[k]) {
      case 0: ind = p.a; break;
      case 1: ind = p.b; break;
      case 2: ind = p.c; break;
      case 3: ind = p.a && p.b; break;
      case 4: ind = p.a && p.c; break;
      default: ind = p.b && p.c; break;
    }
    eta += ind * theta[k + 1];
  }
  return eta;
}

}  // namespace

double brute_force_stage_b_nhat(const StackedTable& stage_b) {
  const PeriodTable& t0 = stage_b.base;
  const auto& agg = std::get<AggregatedCounts>(stage_b.current);
  const std::vector<int> saturated = {0, 1, 2, 3, 4, 5};

  // theta: mu, A, B, C, AB, AC, BC, T, AT, BT
  auto eta_t1 = [&](const std::vector<double>& theta, Pattern p) {
    std::vector<double> base(theta.begin(), theta.begin() + 7);
    return pattern_eta(base, saturated, p) + theta[7] + (p.a ? theta[8] : 0.0) +
           (p.b ? theta[9] : 0.0);
  };
  auto objective = [&](const std::vector<double>& theta) {
    std::vector<double> base(theta.begin(), theta.begin() + 7);
    double ll = 0.0;
    for (const Pattern& p : kObservedPatterns) {
      double eta = pattern_eta(base, saturated, p);
      ll += double(t0.count(p)) * eta - std::exp(eta);
    }
    const std::array<std::pair<bool, bool>, 3> groups = {{{true, true}, {true, false}, {false, true}}};
    for (const auto& [a, b] : groups) {
      double m = std::exp(eta_t1(theta, Pattern{a, b, true})) +
                 std::exp(eta_t1(theta, Pattern{a, b, false}));
      ll += double(agg.ab_total(a, b)) * std::log(m) - m;
    }
    return -ll;
  };

  // Arithmetic start: exact-fit parameters of the base period, zero shifts.
  auto logn = [&](int a, int b, int c) {
    return std::log(std::max(0.5, double(t0.count(Pattern{a != 0, b != 0, c != 0}))));
  };
  double mu = std::log(std::max(1e-3, saturated_m000_closed_form(t0)));
  double A = logn(1, 0, 0) - mu;
  double B = logn(0, 1, 0) - mu;
  double C = logn(0, 0, 1) - mu;
  double AB = logn(1, 1, 0) - mu - A - B;
  double AC = logn(1, 0, 1) - mu - A - C;
  double BC = logn(0, 1, 1) - mu - B - C;
  double shift = std::log(double(agg.total()) / double(t0.total()));
  std::vector<double> start = {mu, A, B, C, AB, AC, BC, shift, 0.0, 0.0};

  std::vector<double> theta = nelder_mead(objective, start);
  double nhat = 0.0;
  for (int idx = 0; idx < 8; ++idx) nhat += std::exp(eta_t1(theta, Pattern::from_index(idx)));
  return nhat;
}

std::array<double, 8> brute_force_single_period(const PeriodTable& table,
                                                const std::vector<int>& term_indices) {
  auto objective = [&](const std::vector<double>& theta) {
    double ll = 0.0;
    for (const Pattern& p : kObservedPatterns) {
      double eta = pattern_eta(theta, term_indices, p);
      ll += double(table.count(p)) * eta - std::exp(eta);
    }
    return -ll;
  };
  std::vector<double> start(term_indices.size() + 1, 0.0);
  start[0] = std::log(std::max(1.0, double(table.total()) / 7.0));
  std::vector<double> theta = nelder_mead(objective, start);
  std::array<double, 8> fitted{};
  for (int idx = 0; idx < 8; ++idx)
    fitted[std::size_t(idx)] = std::exp(pattern_eta(theta, term_indices, Pattern::from_index(idx)));
  return fitted;
}

}  // namespace msenc::testing
