#include "msenc/loglinear.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "msenc/errors.hpp"

namespace msenc {

std::string family_label(Family f) {
  switch (f) {
    case Family::Saturated: return "saturated";
    case Family::TwoPairI: return "2pd-I";
    case Family::TwoPairII: return "2pd-II";
    case Family::TwoPairIII: return "2pd-III";
    case Family::OnePairI: return "1pd-I";
    case Family::OnePairII: return "1pd-II";
    case Family::OnePairIII: return "1pd-III";
    default: return "independence";
  }
}

Family family_from_label(std::string_view label) {
  std::string s(label);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "saturated") return Family::Saturated;
  if (s == "2pd-i") return Family::TwoPairI;
  if (s == "2pd-ii") return Family::TwoPairII;
  if (s == "2pd-iii") return Family::TwoPairIII;
  if (s == "1pd-i") return Family::OnePairI;
  if (s == "1pd-ii") return Family::OnePairII;
  if (s == "1pd-iii") return Family::OnePairIII;
  if (s == "indep" || s == "independence") return Family::Independence;
  throw DataError("unknown model family '" + std::string(label) + "'");
}

std::vector<Term> family_terms(Family f) {
  switch (f) {
    case Family::Saturated:
      return {Term::A, Term::B, Term::C, Term::AB, Term::AC, Term::BC};
    case Family::TwoPairI:
      return {Term::A, Term::B, Term::C, Term::AC, Term::BC};
    case Family::TwoPairII:
      return {Term::A, Term::B, Term::C, Term::AB, Term::BC};
    case Family::TwoPairIII:
      return {Term::A, Term::B, Term::C, Term::AB, Term::AC};
    case Family::OnePairI:
      return {Term::A, Term::B, Term::C, Term::BC};
    case Family::OnePairII:
      return {Term::A, Term::B, Term::C, Term::AC};
    case Family::OnePairIII:
      return {Term::A, Term::B, Term::C, Term::AB};
    default:
      return {Term::A, Term::B, Term::C};
  }
}

std::string term_label(Term t) {
  switch (t) {
    case Term::A: return "A";
    case Term::B: return "B";
    case Term::C: return "C";
    case Term::AB: return "AB";
    case Term::AC: return "AC";
    default: return "BC";
  }
}

std::string period_term_label(PeriodTerm t) {
  switch (t) {
    case PeriodTerm::Shift: return "t1";
    case PeriodTerm::AShift: return "A:t1";
    default: return "B:t1";
  }
}

ModelSpec ModelSpec::for_family(Family f) {
  ModelSpec spec;
  spec.family = f;
  spec.base_terms = family_terms(f);
  return spec;
}

std::vector<std::string> ModelSpec::param_labels() const {
  std::vector<std::string> labels = {"intercept"};
  for (Term t : base_terms) labels.push_back(term_label(t));
  for (PeriodTerm t : period_terms) labels.push_back(period_term_label(t));
  return labels;
}

namespace {

double term_indicator(Term t, Pattern p) {
  switch (t) {
    case Term::A: return p.a ? 1.0 : 0.0;
    case Term::B: return p.b ? 1.0 : 0.0;
    case Term::C: return p.c ? 1.0 : 0.0;
    case Term::AB: return (p.a && p.b) ? 1.0 : 0.0;
    case Term::AC: return (p.a && p.c) ? 1.0 : 0.0;
    default: return (p.b && p.c) ? 1.0 : 0.0;
  }
}

double period_term_indicator(PeriodTerm t, const Cell& cell) {
  if (cell.period == 0) return 0.0;
  switch (t) {
    case PeriodTerm::Shift: return 1.0;
    case PeriodTerm::AShift: return cell.pattern.a ? 1.0 : 0.0;
    default: return cell.pattern.b ? 1.0 : 0.0;
  }
}

constexpr double kRankThreshold = 1e-10;

}  // namespace

Eigen::RowVectorXd design_row(const ModelSpec& spec, const Cell& cell) {
  Eigen::RowVectorXd row(spec.n_params());
  int j = 0;
  row(j++) = 1.0;
  for (Term t : spec.base_terms) row(j++) = term_indicator(t, cell.pattern);
  for (PeriodTerm t : spec.period_terms) row(j++) = period_term_indicator(t, cell);
  return row;
}

DesignMatrix design_matrix(const ModelSpec& spec, const std::vector<Cell>& cells) {
  if (cells.empty()) throw DataError("design matrix requires at least one cell");
  DesignMatrix design;
  design.spec = spec;
  design.cells = cells;
  design.col_labels = spec.param_labels();
  design.X.resize(Eigen::Index(cells.size()), spec.n_params());
  for (std::size_t i = 0; i < cells.size(); ++i) design.X.row(Eigen::Index(i)) = design_row(spec, cells[i]);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(design.X);
  lu.setThreshold(kRankThreshold);
  if (lu.rank() < design.X.cols())
    throw ModelError("unidentified model for these cells: design rank " +
                     std::to_string(lu.rank()) + " < " + std::to_string(design.X.cols()) +
                     " parameters");
  return design;
}

namespace {

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double term = -(y(i) - mu(i));
    if (y(i) > 0.0) term += y(i) * std::log(y(i) / mu(i));
    dev += 2.0 * term;
  }
  return dev;
}

double poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                      const Eigen::VectorXd& mu) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    ll += (y(i) > 0.0 ? y(i) * eta(i) : 0.0) - mu(i) - std::lgamma(y(i) + 1.0);
  return ll;
}

// Max relative sufficient-statistic mismatch over design columns.
double margin_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& mu) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double observed = X.col(j).dot(y);
    double fitted = X.col(j).dot(mu);
    worst = std::max(worst, std::abs(fitted - observed) / std::max(1.0, std::abs(observed)));
  }
  return worst;
}

}  // namespace

FitResult fit_poisson(const DesignMatrix& design, const Eigen::VectorXd& counts,
                      const FitOptions& options) {
  const Eigen::MatrixXd& X = design.X;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (counts.size() != n)
    throw DataError("count vector length " + std::to_string(counts.size()) +
                    " does not match " + std::to_string(n) + " design rows");
  for (Eigen::Index i = 0; i < n; ++i)
    if (counts(i) < 0.0) throw DataError("negative count in fitted observations");

  FitResult result;
  result.spec = design.spec;
  result.param_labels = design.col_labels;
  result.cells = design.cells;
  result.counts = counts;
  result.n_obs = int(n);
  result.n_params = int(p);
  result.df = int(n - p);

  // Working start: mu = y + 0.5 keeps zero counts off the log singularity.
  Eigen::VectorXd mu = counts.array() + 0.5;
  Eigen::VectorXd eta = mu.array().log();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  double dev = poisson_deviance(counts, mu);
  result.deviance_trace.push_back(dev);

  bool done = false;
  int iter = 0;
  for (; iter < options.max_iterations && !done; ++iter) {
    // Newton step on the canonical link via weighted normal equations.
    Eigen::VectorXd w = mu;
    Eigen::VectorXd z = eta + (counts - mu).cwiseQuotient(mu);
    Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X;
    Eigen::VectorXd b = X.transpose() * (w.asDiagonal() * z);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(kRankThreshold);
    if (lu.rank() < p)
      throw ModelError("unidentified model for these cells: weighted normal equations are rank deficient");
    Eigen::VectorXd proposal = lu.solve(b);

    // Step-halving keeps the deviance non-increasing.
    Eigen::VectorXd direction = proposal - theta;
    double step = 1.0;
    Eigen::VectorXd theta_new;
    double dev_new = 0.0;
    for (int h = 0; h < 40; ++h) {
      theta_new = theta + step * direction;
      Eigen::VectorXd eta_new = X * theta_new;
      Eigen::VectorXd mu_new = eta_new.array().exp();
      dev_new = poisson_deviance(counts, mu_new);
      if (std::isfinite(dev_new) && dev_new <= dev + 1e-12 * (1.0 + std::abs(dev))) break;
      step *= 0.5;
    }
    theta = theta_new;
    eta = X * theta;
    mu = eta.array().exp();

    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::abs(theta(j)) > options.divergence_bound) {
        double margin = X.col(j).dot(counts);
        throw ModelError("parameter '" + design.col_labels[std::size_t(j)] +
                         "' diverged (|" + design.col_labels[std::size_t(j)] + "| > " +
                         std::to_string(options.divergence_bound) +
                         "); its sufficient statistic is " + std::to_string(margin));
      }
    }

    double change = std::abs(dev - dev_new);
    dev = dev_new;
    result.deviance_trace.push_back(dev);
    if (change < options.tolerance && margin_residual(X, counts, mu) < 1e-11) done = true;
  }

  if (!done && margin_residual(X, counts, mu) > 1e-8)
    throw ConvergenceError("IRLS did not converge in " + std::to_string(options.max_iterations) +
                           " iterations");

  result.parameters = theta;
  result.converged = true;
  result.iterations = iter;
  result.deviance = dev;
  result.loglik = poisson_loglik(counts, eta, mu);

  std::set<int> periods;
  for (const Cell& cell : design.cells) periods.insert(cell.period);
  for (int period : periods) {
    std::array<double, 8> fitted{};
    for (int idx = 0; idx < 8; ++idx) {
      Cell cell{period, Pattern::from_index(idx)};
      fitted[std::size_t(idx)] = std::exp(design_row(design.spec, cell).dot(theta));
    }
    result.fitted_by_period[period] = fitted;
  }
  return result;
}

double FitResult::param(std::string_view label) const {
  for (std::size_t j = 0; j < param_labels.size(); ++j)
    if (param_labels[j] == label) return parameters(Eigen::Index(j));
  throw DataError("no parameter labelled '" + std::string(label) + "'");
}

double extrapolate_cell(const FitResult& fit, int period, Pattern pattern) {
  Cell cell{period, pattern};
  return std::exp(design_row(fit.spec, cell).dot(fit.parameters));
}

InformationCriteria information_criteria(const FitResult& fit) {
  InformationCriteria ic;
  ic.aic = -2.0 * fit.loglik + 2.0 * fit.n_params;
  ic.bic = -2.0 * fit.loglik + fit.n_params * std::log(double(fit.n_obs));
  return ic;
}

// --- IPF -----------------------------------------------------------------------

namespace {

// Variable mask over (A, B, C, period); generators are the maximal term masks.
constexpr unsigned kVarA = 1, kVarB = 2, kVarC = 4, kVarT = 8;

unsigned term_mask(Term t) {
  switch (t) {
    case Term::A: return kVarA;
    case Term::B: return kVarB;
    case Term::C: return kVarC;
    case Term::AB: return kVarA | kVarB;
    case Term::AC: return kVarA | kVarC;
    default: return kVarB | kVarC;
  }
}

unsigned period_term_mask(PeriodTerm t) {
  switch (t) {
    case PeriodTerm::Shift: return kVarT;
    case PeriodTerm::AShift: return kVarA | kVarT;
    default: return kVarB | kVarT;
  }
}

unsigned cell_key(const Cell& cell, unsigned mask) {
  unsigned key = 0;
  if ((mask & kVarA) && cell.pattern.a) key |= kVarA;
  if ((mask & kVarB) && cell.pattern.b) key |= kVarB;
  if ((mask & kVarC) && cell.pattern.c) key |= kVarC;
  if ((mask & kVarT) && cell.period != 0) key |= kVarT;
  return key;
}

std::vector<unsigned> generator_masks(const ModelSpec& spec) {
  std::vector<unsigned> masks;
  for (Term t : spec.base_terms) masks.push_back(term_mask(t));
  for (PeriodTerm t : spec.period_terms) masks.push_back(period_term_mask(t));
  if (masks.empty()) masks.push_back(0);  // intercept-only model: match the grand total
  std::vector<unsigned> maximal;
  for (unsigned m : masks) {
    bool dominated = false;
    for (unsigned other : masks)
      if (other != m && (other & m) == m) dominated = true;
    if (!dominated && std::find(maximal.begin(), maximal.end(), m) == maximal.end())
      maximal.push_back(m);
  }
  return maximal;
}

}  // namespace

std::vector<double> ipf_fit(const ModelSpec& spec, const std::vector<Cell>& cells,
                            const std::vector<double>& counts, const IpfOptions& options) {
  if (cells.size() != counts.size()) throw DataError("ipf: cells and counts differ in length");
  if (cells.empty()) throw DataError("ipf: no cells");

  // Per generator: map group key -> indices of member cells, with observed totals.
  struct MarginGroup {
    std::vector<std::size_t> members;
    double observed = 0.0;
  };
  std::vector<std::map<unsigned, MarginGroup>> margins;
  for (unsigned mask : generator_masks(spec)) {
    std::map<unsigned, MarginGroup> groups;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      MarginGroup& g = groups[cell_key(cells[i], mask)];
      g.members.push_back(i);
      g.observed += counts[i];
    }
    for (const auto& [key, g] : groups)
      if (g.observed <= 0.0)
        throw ModelError("ipf: zero margin for a sufficient statistic of the model");
    margins.push_back(std::move(groups));
  }

  std::vector<double> fitted(cells.size(), 1.0);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double worst = 0.0;
    for (const auto& groups : margins) {
      for (const auto& [key, g] : groups) {
        double current = 0.0;
        for (std::size_t i : g.members) current += fitted[i];
        if (current <= 0.0) throw ModelError("ipf: fitted margin collapsed to zero");
        double scale = g.observed / current;
        for (std::size_t i : g.members) fitted[i] *= scale;
        worst = std::max(worst, std::abs(current - g.observed) / std::max(1.0, g.observed));
      }
    }
    if (worst < options.tolerance) return fitted;
  }
  throw ConvergenceError("ipf did not converge in " + std::to_string(options.max_iterations) +
                         " sweeps");
}

}  // namespace msenc
