#pragma once

#include <optional>
#include <vector>

namespace fodkit {

// ---- special functions (continued-fraction incomplete beta) ----

// Regularized incomplete beta I_x(a, b).
double betainc_reg(double a, double b, double x);

// Student-t CDF and two-sided p for |T| >= t.
double t_cdf(double t, double df);
double t_two_sided_p(double t, double df);

// Quantile via bisection on t_cdf.
double t_quantile(double p, double df);

// Upper tail of F(df1, df2).
double f_sf(double f, double df1, double df2);

double norm_cdf(double z);

// Noncentral-t CDF by quadrature over the chi-square mixing variable.
double noncentral_t_cdf(double t, double df, double ncp);

// ---- tests ----

struct TTestResult {
  double t = 0;
  double df = 0;
  double p = 1;
  double cohens_d = 0;  // pooled-SD d, sign follows mean(a) - mean(b)
};

// Welch by default; student = classic equal-variance test.
TTestResult independent_ttest(const std::vector<double>& a, const std::vector<double>& b,
                              bool student = false);

struct PairedTTestResult {
  double t = 0;
  double df = 0;
  double p = 1;
};
PairedTTestResult paired_ttest(const std::vector<double>& diffs);

struct AnovaResult {
  double ss_between = 0, ss_within = 0;
  double df_between = 0, df_within = 0;
  double f = 0, p = 1;
};
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);
AnovaResult anova_from_ss(double ss_between, double df_between, double ss_within,
                          double df_within);

struct PearsonResult {
  double r = 0;
  double p = 1;
};
PearsonResult pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

// Achieved power of a two-sided two-sample t-test with n per group.
double two_sample_power(double d, long n, double alpha = 0.05);

// Smallest n per group reaching the target power.
long sample_size_for_power(double d, double power, double alpha = 0.05);

// ---- fixel-wise group comparison ----

struct FixelGroupTest {
  std::vector<double> p_values;  // per fixel
  std::vector<char> significant;
};

// Welch t per fixel index on FD values; optional BH-FDR across fixels.
// cohort[subject][fixel].
FixelGroupTest fixelwise_group_test(const std::vector<std::vector<double>>& cohort_a,
                                    const std::vector<std::vector<double>>& cohort_b,
                                    double alpha = 0.05, bool fdr = true);

struct ConfusionCounts {
  long tp = 0, fn = 0, fp = 0, tn = 0;
};

struct ConfusionScores {
  ConfusionCounts counts;
  std::optional<double> sensitivity, specificity, precision, f1;
};

ConfusionScores confusion_vs_reference(const std::vector<char>& reference_sig,
                                       const std::vector<char>& method_sig);

} // namespace fodkit
