#pragma once

// Instance generators.
//
//  * synthetic  - K arms of correlated Gaussian features clamped to a box,
//                 sparse uniform coefficient vector.
//  * margin     - two arms differing by a signed-Beta bump on the first
//                 coordinate; the near-tie probability is controlled exactly.
//  * hard       - a two-arm needle-in-a-haystack family whose gap scale is
//                 tuned to the intended horizon.
//  * replay     - labeled CSV rows turned into a bandit via block embedding.

#include "l1bandit/core.hpp"
#include "l1bandit/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace l1bandit {

inline double clamp_box(double v, double bound) {
  return std::max(-bound, std::min(bound, v));
}

// ---------------------------------------------------------------------------
// synthetic environment
// ---------------------------------------------------------------------------

enum class BetaDist { kUniform01, kUniform002 };

struct SyntheticSpec {
  int K = 5;
  int d = 100;
  int s0 = 5;
  BetaDist beta_dist = BetaDist::kUniform01;
  double cov_decay = 0.5;  ///< latent covariance is cov_decay^|i-j|
  double sigma = 1.0;
  double x_max = 1.0;
  bool normalize_linf = false;  ///< rescale every arm to ||x||_inf = 1

  void validate() const {
    if (K < 1) throw ValidationError("synthetic: K must be >= 1");
    if (d < 1) throw ValidationError("synthetic: d must be >= 1");
    if (s0 < 1 || s0 > d) throw ValidationError("synthetic: s0 must be in [1,d]");
    if (cov_decay < 0.0 || cov_decay >= 1.0)
      throw ValidationError("synthetic: cov_decay must be in [0,1)");
    if (sigma < 0.0) throw ValidationError("synthetic: sigma must be >= 0");
    if (x_max <= 0.0) throw ValidationError("synthetic: x_max must be > 0");
  }
};

/// Sparse coefficient vector: s0 coordinates chosen uniformly without
/// replacement, values i.i.d. uniform on (0,1) or (0,0.2).
inline TrueModel sample_synthetic_model(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<int> idx(static_cast<std::size_t>(spec.d));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < spec.s0; ++i) {
    const int j = i + uniform_int(rng, spec.d - i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<int> support(idx.begin(), idx.begin() + spec.s0);
  std::sort(support.begin(), support.end());

  TrueModel model;
  model.beta = Vec::Zero(spec.d);
  const double scale = spec.beta_dist == BetaDist::kUniform002 ? 0.2 : 1.0;
  for (int j : support) model.beta[j] = scale * uniform_open01(rng);
  model.support = std::move(support);
  model.b = model.beta.lpNorm<1>();
  model.sigma = spec.sigma;
  model.x_max = spec.x_max;
  return model;
}

/// One latent feature draw: stationary AR(1) with unit marginal variance,
/// so cov(z_i, z_j) = cov_decay^|i-j| exactly.
inline Vec ar1_latent(int d, double rho, Rng& rng) {
  Vec z(d);
  z[0] = normal(rng);
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (int i = 1; i < d; ++i) z[i] = rho * z[i - 1] + innovation * normal(rng);
  return z;
}

/// K independent feature draws, clamped coordinate-wise into the box.
/// When `latents` is given it receives the pre-clamp draws (for moment
/// checks).  With normalize_linf every arm is rescaled to sup-norm 1.
inline ContextRound gen_synthetic_round(const SyntheticSpec& spec, Rng& rng,
                                        std::vector<Vec>* latents = nullptr) {
  ContextRound round;
  round.arms.reserve(static_cast<std::size_t>(spec.K));
  if (latents != nullptr) latents->clear();
  for (int a = 0; a < spec.K; ++a) {
    Vec z = ar1_latent(spec.d, spec.cov_decay, rng);
    if (latents != nullptr) latents->push_back(z);
    Vec x(spec.d);
    for (int i = 0; i < spec.d; ++i) x[i] = clamp_box(z[i], spec.x_max);
    if (spec.normalize_linf) {
      const double n = x.lpNorm<Eigen::Infinity>();
      if (n > 0.0) x /= n;
    }
    round.arms.push_back(std::move(x));
  }
  return round;
}

/// Observed reward of a pulled arm: linear mean plus Gaussian noise.
inline double draw_reward(const Vec& x, const TrueModel& model, Rng& rng) {
  return x.dot(model.beta) + model.sigma * normal(rng);
}

// ---------------------------------------------------------------------------
// margin environment
// ---------------------------------------------------------------------------

struct MarginSpec {
  double alpha = 1.0;      ///< near-tie exponent; P(|bump| <= h) = h^alpha
  int d = 10;
  double cov_decay = 0.5;  ///< base-draw correlation
  double sigma = 1.0;
  double base_x_max = 1.0;  ///< box of the base draw

  /// Box bound of the environment itself.  The bumped coordinate ranges
  /// over [-base-1, base+1], so declaring the wider box keeps every arm
  /// inside it without re-clamping (re-clamping would pile probability
  /// onto exact reward ties and break the near-tie law).
  double x_max() const { return base_x_max + 1.0; }

  void validate() const {
    if (alpha <= 0.0) throw ValidationError("margin: alpha must be > 0");
    if (d < 1) throw ValidationError("margin: d must be >= 1");
    if (cov_decay < 0.0 || cov_decay >= 1.0)
      throw ValidationError("margin: cov_decay must be in [0,1)");
    if (sigma < 0.0) throw ValidationError("margin: sigma must be >= 0");
    if (base_x_max <= 0.0) throw ValidationError("margin: base_x_max must be > 0");
  }
};

/// Gap scale below which near-ties follow the polynomial law with constant
/// 1/2, i.e. P(gap <= h) <= (h/delta_star)^alpha / 2 for h <= delta_star.
inline double margin_delta_star(double alpha) {
  if (alpha <= 0.0) throw ValidationError("margin_delta_star: alpha must be > 0");
  return std::pow(2.0, -1.0 / alpha);
}

/// First coordinate carries the signal: beta = e_0.
inline TrueModel margin_model(const MarginSpec& spec) {
  spec.validate();
  TrueModel model;
  model.beta = Vec::Zero(spec.d);
  model.beta[0] = 1.0;
  model.support = {0};
  model.b = 1.0;
  model.sigma = spec.sigma;
  model.x_max = spec.x_max();
  return model;
}

/// Signed Beta(alpha, 1) bump: magnitude U^{1/alpha}, fair random sign.
inline double margin_bump(const MarginSpec& spec, Rng& rng) {
  const double mag = std::pow(uniform_open01(rng), 1.0 / spec.alpha);
  return uniform01(rng) < 0.5 ? mag : -mag;
}

/// Arm 0 is the base draw, arm 1 adds the bump on coordinate 0.  Under the
/// margin model the reward gap is exactly |bump|.
inline ContextRound gen_margin_round(const MarginSpec& spec, Rng& rng,
                                     double* bump_out = nullptr) {
  spec.validate();
  Vec z = ar1_latent(spec.d, spec.cov_decay, rng);
  Vec x(spec.d);
  for (int i = 0; i < spec.d; ++i) x[i] = clamp_box(z[i], spec.base_x_max);
  const double zeta = margin_bump(spec, rng);
  if (bump_out != nullptr) *bump_out = zeta;
  Vec x1 = x;
  x1[0] += zeta;
  ContextRound round;
  round.arms.push_back(std::move(x));
  round.arms.push_back(std::move(x1));
  return round;
}

// ---------------------------------------------------------------------------
// hard environment
// ---------------------------------------------------------------------------

/// Two-arm family in dimension d+1.  Coordinate 0 of arm 0 is a three-point
/// sign variable; the remaining d coordinates are a clamped Gaussian payload
/// that arm 1 carries negated (and with coordinate 0 zeroed).  The true
/// parameter puts weight 1 on coordinate 0 and a horizon-tuned weight theta
/// on one uniformly hidden payload coordinate.
struct HardInstanceSpec {
  int d = 200;       ///< payload dimension (total feature dim is d+1)
  int T = 1000;      ///< intended horizon the gap scale is tuned to
  double alpha = 0.0;
  double c_x0 = 0.5;  ///< scale of P(X0 = 0) = min(1, c_x0 * beta_min^alpha)
  double sigma = 1.0;
  double x_max = 1.0;

  void validate() const {
    if (d < 2) throw ValidationError("hard: d must be >= 2");
    if (T < 2) throw ValidationError("hard: T must be >= 2");
    if (alpha < 0.0) throw ValidationError("hard: alpha must be >= 0");
    if (c_x0 <= 0.0) throw ValidationError("hard: c_x0 must be > 0");
    if (sigma <= 0.0) throw ValidationError("hard: sigma must be > 0");
    if (x_max <= 0.0) throw ValidationError("hard: x_max must be > 0");
  }

  double beta_min() const {
    return std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(T));
  }
  double theta() const { return sigma / (2.0 * x_max) * beta_min(); }
  double p_zero() const { return std::min(1.0, c_x0 * std::pow(beta_min(), alpha)); }
  int dim() const { return d + 1; }
};

inline TrueModel sample_hard_model(const HardInstanceSpec& spec, Rng& rng) {
  spec.validate();
  const int u = 1 + uniform_int(rng, spec.d);  // hidden payload coordinate
  TrueModel model;
  model.beta = Vec::Zero(spec.dim());
  model.beta[0] = 1.0;
  model.beta[u] = spec.theta();
  model.support = {0, u};
  model.b = 1.0 + spec.theta();
  model.sigma = spec.sigma;
  model.x_max = spec.x_max;
  return model;
}

inline ContextRound gen_hard_round(const HardInstanceSpec& spec, Rng& rng) {
  const double p0 = spec.p_zero();
  double x0 = 0.0;
  if (uniform01(rng) >= p0) x0 = uniform01(rng) < 0.5 ? 1.0 : -1.0;
  Vec arm0(spec.dim());
  Vec arm1 = Vec::Zero(spec.dim());
  arm0[0] = x0;
  for (int i = 1; i < spec.dim(); ++i) {
    const double v = clamp_box(normal(rng), spec.x_max);
    arm0[i] = v;
    arm1[i] = -v;
  }
  ContextRound round;
  round.arms.push_back(std::move(arm0));
  round.arms.push_back(std::move(arm1));
  return round;
}

// ---------------------------------------------------------------------------
// replay environment
// ---------------------------------------------------------------------------

struct ReplayDataset {
  int num_arms = 0;
  int num_covariates = 0;
  std::vector<int> labels;  ///< best arm per row
  Mat rows;                 ///< n x p covariate matrix
};

namespace detail {
inline bool parse_double_field(const std::string& field, double* out) {
  const char* begin = field.c_str();
  char* end = nullptr;
  *out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return false;
    ++end;
  }
  return std::isfinite(*out);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}
}  // namespace detail

/// Loads a labeled dataset: header row, then per row an integer best-arm
/// label in [0, num_arms) followed by the covariates.  Any malformed or
/// missing field raises a ValidationError naming the 1-based line.
inline ReplayDataset replay_load(const std::string& path, int num_arms) {
  if (num_arms < 1) throw ValidationError("replay_load: num_arms must be >= 1");
  std::ifstream in(path);
  if (!in) throw IoError("replay_load: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("replay_load: line 1: missing header row");

  std::vector<int> labels;
  std::vector<std::vector<double>> data;
  int p = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "replay_load: line " + std::to_string(line_no);
    if (fields.size() < 2)
      throw ValidationError(where + ": expected a label and covariates");
    double label_val = 0.0;
    if (!detail::parse_double_field(fields[0], &label_val) ||
        label_val != std::floor(label_val))
      throw ValidationError(where + ": label is not an integer");
    const int label = static_cast<int>(label_val);
    if (label < 0 || label >= num_arms)
      throw ValidationError(where + ": label " + std::to_string(label) +
                            " outside [0," + std::to_string(num_arms) + ")");
    const int row_p = static_cast<int>(fields.size()) - 1;
    if (p < 0) p = row_p;
    if (row_p != p)
      throw ValidationError(where + ": expected " + std::to_string(p) +
                            " covariates, found " + std::to_string(row_p));
    std::vector<double> row(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      if (fields[static_cast<std::size_t>(j + 1)].empty())
        throw ValidationError(where + ": missing value in column " +
                              std::to_string(j + 2));
      if (!detail::parse_double_field(fields[static_cast<std::size_t>(j + 1)],
                                      &row[static_cast<std::size_t>(j)]))
        throw ValidationError(where + ": bad number in column " +
                              std::to_string(j + 2));
    }
    labels.push_back(label);
    data.push_back(std::move(row));
  }
  if (data.empty()) throw ValidationError("replay_load: no data rows");

  ReplayDataset ds;
  ds.num_arms = num_arms;
  ds.num_covariates = p;
  ds.labels = std::move(labels);
  ds.rows.resize(static_cast<Eigen::Index>(data.size()), p);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (int j = 0; j < p; ++j)
      ds.rows(static_cast<Eigen::Index>(i), j) = data[i][static_cast<std::size_t>(j)];
  return ds;
}

/// Block embedding: arm a's feature vector is the raw context written into
/// the a-th of K blocks of a K*p-dimensional vector, zero elsewhere.  This
/// turns per-arm coefficient vectors into one shared vector.
inline ContextRound embed_round(const Vec& context, int num_arms) {
  if (num_arms < 1) throw ValidationError("embed_round: num_arms must be >= 1");
  const int p = static_cast<int>(context.size());
  ContextRound round;
  round.arms.reserve(static_cast<std::size_t>(num_arms));
  for (int a = 0; a < num_arms; ++a) {
    Vec x = Vec::Zero(static_cast<Eigen::Index>(num_arms) * p);
    x.segment(static_cast<Eigen::Index>(a) * p, p) = context;
    round.arms.push_back(std::move(x));
  }
  return round;
}

// ---------------------------------------------------------------------------
// population moments (environment oracle)
// ---------------------------------------------------------------------------

namespace detail {
inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}
inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// E[clamp(W, +-m)] for W ~ N(mu, s^2).
inline double clamped_mean(double mu, double s, double m = 1.0) {
  if (s <= 0.0) return clamp_box(mu, m);
  const double a = (-m - mu) / s;
  const double b = (m - mu) / s;
  const double mid = mu * (std_normal_cdf(b) - std_normal_cdf(a)) -
                     s * (std_normal_pdf(b) - std_normal_pdf(a));
  return mid + m * (1.0 - std_normal_cdf(b)) - m * std_normal_cdf(a);
}
}  // namespace detail

/// Var of a standard normal clamped to [-m, m] (its mean is zero).
inline double clamped_normal_second_moment(double m = 1.0) {
  const double inside = (detail::std_normal_cdf(m) - detail::std_normal_cdf(-m)) -
                        2.0 * m * detail::std_normal_pdf(m);
  const double tails = 2.0 * m * m * (1.0 - detail::std_normal_cdf(m));
  return inside + tails;
}

/// E[clamp(X)clamp(Y)] for standard bivariate normals with correlation c,
/// both clamped to [-m, m]; evaluated by conditioning (closed-form inner
/// expectation) and Simpson integration over the outer variable.
inline double clamped_bivariate_moment(double c, double m = 1.0) {
  if (c >= 1.0) return clamped_normal_second_moment(m);
  if (c <= -1.0) return -clamped_normal_second_moment(m);
  const double s = std::sqrt(1.0 - c * c);
  const double lo = -8.0, hi = 8.0;
  const int n = 4000;  // even
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + h * i;
    const double f = clamp_box(x, m) * detail::clamped_mean(c * x, s, m) *
                     detail::std_normal_pdf(x);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * f;
  }
  return sum * h / 3.0;
}

/// Population second-moment matrix of one clamped AR(1) feature draw
/// (unit-variance latents clamped into [-x_max, x_max]).  Toeplitz by
/// stationarity.
inline Mat population_clamped_ar_covariance(int d, double rho, double x_max = 1.0) {
  Mat sigma(d, d);
  std::vector<double> lag(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const double c = std::pow(rho, k);
    lag[static_cast<std::size_t>(k)] =
        k == 0 ? clamped_normal_second_moment(x_max)
               : (c < 1e-14 ? 0.0 : clamped_bivariate_moment(c, x_max));
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      sigma(i, j) = lag[static_cast<std::size_t>(std::abs(i - j))];
  return sigma;
}

}  // namespace l1bandit
