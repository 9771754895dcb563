#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "msenc/pattern.hpp"

namespace msenc {

// The eight log-linear model families: the saturated model keeps all three
// pairwise interactions; the restricted families drop one or more of them.
enum class Family {
  Saturated,
  TwoPairI,    // drops AB
  TwoPairII,   // drops AC
  TwoPairIII,  // drops BC
  OnePairI,    // keeps BC only
  OnePairII,   // keeps AC only
  OnePairIII,  // keeps AB only
  Independence
};

inline constexpr std::array<Family, 8> kAllFamilies = {
    Family::Saturated, Family::TwoPairI,  Family::TwoPairII,  Family::TwoPairIII,
    Family::OnePairI,  Family::OnePairII, Family::OnePairIII, Family::Independence};

std::string family_label(Family f);
Family family_from_label(std::string_view label);

enum class Term { A, B, C, AB, AC, BC };
enum class PeriodTerm { Shift, AShift, BShift };

std::vector<Term> family_terms(Family f);
std::string term_label(Term t);
std::string period_term_label(PeriodTerm t);

// Terms of a (possibly two-period) log-linear model; the intercept is always
// included. Period terms are active only at the non-base period.
struct ModelSpec {
  Family family = Family::Saturated;
  std::vector<Term> base_terms;
  std::vector<PeriodTerm> period_terms;

  static ModelSpec for_family(Family f);

  int n_params() const { return 1 + int(base_terms.size()) + int(period_terms.size()); }
  std::vector<std::string> param_labels() const;
};

// One fitted observation: a fully specified cell of period 0 (base) or 1.
struct Cell {
  int period = 0;
  Pattern pattern;

  auto operator<=>(const Cell&) const = default;
};

Eigen::RowVectorXd design_row(const ModelSpec& spec, const Cell& cell);

struct DesignMatrix {
  ModelSpec spec;
  std::vector<Cell> cells;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd X;  // entries in {0,1}; rows follow `cells`, cols follow `col_labels`
};

// Builds the dummy-coded design and verifies full column rank.
DesignMatrix design_matrix(const ModelSpec& spec, const std::vector<Cell>& cells);

struct FitOptions {
  double tolerance = 1e-10;  // deviance change between IRLS iterations
  int max_iterations = 100;
  double divergence_bound = 30.0;  // |theta_j| beyond this aborts as structural zero
};

struct FitResult {
  ModelSpec spec;
  std::vector<std::string> param_labels;
  Eigen::VectorXd parameters;
  std::vector<Cell> cells;
  Eigen::VectorXd counts;
  // All 8 cell expectations for every period present among the fitted cells,
  // extrapolated where the cell is not a fitted observation.
  std::map<int, std::array<double, 8>> fitted_by_period;
  double loglik = 0.0;
  double deviance = 0.0;
  int df = 0;
  int n_obs = 0;
  int n_params = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> deviance_trace;

  double fitted(int period, Pattern p) const { return fitted_by_period.at(period)[p.index()]; }
  double param(std::string_view label) const;
};

// Maximum-likelihood Poisson log-linear fit by IRLS with step-halving.
FitResult fit_poisson(const DesignMatrix& design, const Eigen::VectorXd& counts,
                      const FitOptions& options = {});

// Expected count exp(x'theta) at any cell, fitted or not.
double extrapolate_cell(const FitResult& fit, int period, Pattern pattern);

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

InformationCriteria information_criteria(const FitResult& fit);

struct IpfOptions {
  double tolerance = 1e-12;  // max relative margin mismatch
  int max_iterations = 200000;
};

// Iterative proportional fitting to the spec's sufficient margins; serves as
// an independent cross-check of fit_poisson for these hierarchical models.
std::vector<double> ipf_fit(const ModelSpec& spec, const std::vector<Cell>& cells,
                            const std::vector<double>& counts, const IpfOptions& options = {});

}  // namespace msenc
