#include "fodkit/stats.hpp"
#include "fodkit/connectome.hpp"
#include "fodkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fodkit {

namespace {

// Lentz continued fraction for the incomplete beta (Numerical Recipes form).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15, kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin)
    d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin)
      d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin)
      c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin)
      d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin)
      c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps)
      break;
  }
  return h;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_var(const std::vector<double>& v, double mean) {
  double s = 0;
  for (double x : v)
    s += (x - mean) * (x - mean);
  return s / double(v.size() - 1);
}

} // namespace

double betainc_reg(double a, double b, double x) {
  if (x <= 0)
    return 0;
  if (x >= 1)
    return 1;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                 b * std::log1p(-x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0))
    return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double df) {
  double x = df / (df + t * t);
  double tail = 0.5 * betainc_reg(df / 2.0, 0.5, x);
  return t >= 0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double df) {
  return betainc_reg(df / 2.0, 0.5, df / (df + t * t));
}

double t_quantile(double p, double df) {
  if (p <= 0 || p >= 1)
    fail("invalid_probability", "t quantile needs p in (0,1)");
  double lo = -1e4, hi = 1e4;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (t_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double f_sf(double f, double df1, double df2) {
  if (f <= 0)
    return 1;
  return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double noncentral_t_cdf(double t, double df, double ncp) {
  // P(T <= t) = E_X[ Phi(t*sqrt(X/df) - ncp) ], X ~ chi-square(df).
  // Simpson quadrature over the bulk of the chi-square density.
  double lo = std::max(0.0, df - 12.0 * std::sqrt(2.0 * df) - 12.0);
  double hi = df + 12.0 * std::sqrt(2.0 * df) + 30.0;
  const int n = 4000;  // even
  double h = (hi - lo) / n;
  double lg = std::lgamma(df / 2.0);
  auto integrand = [&](double x) {
    if (x <= 0)
      return 0.0;
    double lpdf = (df / 2.0 - 1.0) * std::log(x) - x / 2.0 - lg - (df / 2.0) * std::log(2.0);
    return std::exp(lpdf) * norm_cdf(t * std::sqrt(x / df) - ncp);
  };
  double sum = integrand(lo) + integrand(hi);
  for (int i = 1; i < n; ++i)
    sum += integrand(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return std::clamp(sum * h / 3.0, 0.0, 1.0);
}

TTestResult independent_ttest(const std::vector<double>& a, const std::vector<double>& b,
                              bool student) {
  if (a.size() < 2 || b.size() < 2)
    fail("insufficient_samples", "each group needs at least 2 samples");
  double na = double(a.size()), nb = double(b.size());
  double ma = mean_of(a), mb = mean_of(b);
  double va = sample_var(a, ma), vb = sample_var(b, mb);
  double pooled_var = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
  if (va == 0 && vb == 0 && ma == mb) {
    // Identical constant groups: no evidence either way.
    return {0.0, na + nb - 2, 1.0, 0.0};
  }
  if (pooled_var == 0)
    fail("degenerate_variance", "both groups have zero variance");

  TTestResult r;
  if (student) {
    double se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
    r.t = (ma - mb) / se;
    r.df = na + nb - 2;
  } else {
    double sea = va / na, seb = vb / nb;
    double se = std::sqrt(sea + seb);
    if (se == 0)
      fail("degenerate_variance", "zero standard error");
    r.t = (ma - mb) / se;
    r.df = (sea + seb) * (sea + seb) /
           (sea * sea / (na - 1) + seb * seb / (nb - 1));
  }
  r.p = t_two_sided_p(r.t, r.df);
  r.cohens_d = (ma - mb) / std::sqrt(pooled_var);
  return r;
}

PairedTTestResult paired_ttest(const std::vector<double>& diffs) {
  if (diffs.size() < 3)
    fail("insufficient_samples", "paired t-test needs at least 3 pairs");
  double n = double(diffs.size());
  double m = mean_of(diffs);
  double v = sample_var(diffs, m);
  PairedTTestResult r;
  r.df = n - 1;
  if (v == 0) {
    // Constant nonzero difference: infinitely strong evidence.
    r.t = m > 0 ? std::numeric_limits<double>::infinity()
                : -std::numeric_limits<double>::infinity();
    r.p = m == 0 ? 1.0 : 0.0;
    return r;
  }
  r.t = m / std::sqrt(v / n);
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

AnovaResult anova_from_ss(double ss_between, double df_between, double ss_within,
                          double df_within) {
  if (df_between <= 0 || df_within <= 0)
    fail("invalid_df", "degrees of freedom must be positive");
  if (ss_within <= 0)
    fail("degenerate_variance", "within-group sum of squares must be positive");
  AnovaResult r;
  r.ss_between = ss_between;
  r.ss_within = ss_within;
  r.df_between = df_between;
  r.df_within = df_within;
  r.f = (ss_between / df_between) / (ss_within / df_within);
  r.p = f_sf(r.f, df_between, df_within);
  return r;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2)
    fail("insufficient_groups", "ANOVA needs at least 2 groups");
  double grand_sum = 0;
  long total_n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2)
      fail("insufficient_samples", "each group needs at least 2 samples");
    grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
    total_n += long(g.size());
  }
  double grand_mean = grand_sum / double(total_n);
  double ssb = 0, ssw = 0;
  for (const auto& g : groups) {
    double gm = mean_of(g);
    ssb += double(g.size()) * (gm - grand_mean) * (gm - grand_mean);
    for (double x : g)
      ssw += (x - gm) * (x - gm);
  }
  return anova_from_ss(ssb, double(groups.size()) - 1, ssw,
                       double(total_n) - double(groups.size()));
}

PearsonResult pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    fail("length_mismatch", "x and y lengths differ");
  if (x.size() < 3)
    fail("insufficient_samples", "Pearson correlation needs at least 3 pairs");
  double n = double(x.size());
  double mx = mean_of(x), my = mean_of(y);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0)
    fail("degenerate_variance", "zero variance input");
  PearsonResult res;
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(res.r) >= 1.0) {
    res.p = 0.0;
  } else {
    double t = res.r * std::sqrt((n - 2) / (1 - res.r * res.r));
    res.p = t_two_sided_p(t, n - 2);
  }
  return res;
}

double two_sample_power(double d, long n, double alpha) {
  double df = 2.0 * double(n) - 2.0;
  double ncp = std::abs(d) * std::sqrt(double(n) / 2.0);
  double tcrit = t_quantile(1.0 - alpha / 2.0, df);
  return 1.0 - noncentral_t_cdf(tcrit, df, ncp) + noncentral_t_cdf(-tcrit, df, ncp);
}

long sample_size_for_power(double d, double power, double alpha) {
  if (d == 0)
    fail("invalid_effect_size", "effect size must be nonzero");
  if (power <= 0 || power >= 1)
    fail("invalid_power", "power must be in (0,1)");

  // Normal-approximation start, then exact noncentral-t refinement.
  double za = t_quantile(1.0 - alpha / 2.0, 1e6);
  double zb = t_quantile(power, 1e6);
  long n = std::max<long>(2, long(std::floor(2.0 * (za + zb) * (za + zb) / (d * d))) - 2);
  while (two_sample_power(d, n, alpha) < power)
    ++n;
  while (n > 2 && two_sample_power(d, n - 1, alpha) >= power)
    --n;
  return n;
}

FixelGroupTest fixelwise_group_test(const std::vector<std::vector<double>>& cohort_a,
                                    const std::vector<std::vector<double>>& cohort_b,
                                    double alpha, bool fdr) {
  if (cohort_a.size() < 2 || cohort_b.size() < 2)
    fail("insufficient_samples", "each group needs at least 2 subjects");
  std::size_t nfix = cohort_a[0].size();
  for (const auto& s : cohort_a)
    if (s.size() != nfix)
      fail("length_mismatch", "subjects disagree on fixel count");
  for (const auto& s : cohort_b)
    if (s.size() != nfix)
      fail("length_mismatch", "subjects disagree on fixel count");

  FixelGroupTest out;
  out.p_values.resize(nfix);
  std::vector<double> a(cohort_a.size()), b(cohort_b.size());
  for (std::size_t f = 0; f < nfix; ++f) {
    for (std::size_t s = 0; s < cohort_a.size(); ++s)
      a[s] = cohort_a[s][f];
    for (std::size_t s = 0; s < cohort_b.size(); ++s)
      b[s] = cohort_b[s][f];
    try {
      out.p_values[f] = independent_ttest(a, b).p;
    } catch (const Error&) {
      out.p_values[f] = 1.0;  // degenerate fixel: never significant
    }
  }
  if (fdr) {
    out.significant = benjamini_hochberg(out.p_values, alpha);
  } else {
    out.significant.resize(nfix);
    for (std::size_t f = 0; f < nfix; ++f)
      out.significant[f] = out.p_values[f] < alpha;
  }
  return out;
}

ConfusionScores confusion_vs_reference(const std::vector<char>& reference_sig,
                                       const std::vector<char>& method_sig) {
  if (reference_sig.size() != method_sig.size())
    fail("length_mismatch", "significance vectors differ in length");
  ConfusionScores s;
  for (std::size_t i = 0; i < reference_sig.size(); ++i) {
    bool ref = reference_sig[i], got = method_sig[i];
    if (ref && got)
      ++s.counts.tp;
    else if (ref && !got)
      ++s.counts.fn;
    else if (!ref && got)
      ++s.counts.fp;
    else
      ++s.counts.tn;
  }
  auto ratio = [](long num, long den) -> std::optional<double> {
    if (den == 0)
      return std::nullopt;
    return double(num) / double(den);
  };
  s.sensitivity = ratio(s.counts.tp, s.counts.tp + s.counts.fn);
  s.specificity = ratio(s.counts.tn, s.counts.tn + s.counts.fp);
  s.precision = ratio(s.counts.tp, s.counts.tp + s.counts.fp);
  if (s.sensitivity && s.precision && (*s.sensitivity + *s.precision) > 0)
    s.f1 = 2.0 * *s.precision * *s.sensitivity / (*s.precision + *s.sensitivity);
  return s;
}

} // namespace fodkit
