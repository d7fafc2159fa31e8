#include "fairrank/btscore.hpp"

#include "fairrank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairrank {

namespace {

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// 1 / (1 + e^{-x}) without overflow.
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double l2_norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double pair_probability(double s_i, double s_j) {
  return sigmoid(s_i - s_j);
}

std::pair<double, std::vector<double>> bt_loss_and_gradient(
    const std::vector<double>& scores, const std::vector<int>& rank,
    double lambda) {
  const std::size_t n = scores.size();
  if (rank.size() != n) {
    throw ValidationError("btscore", "scores and rank sizes differ");
  }
  if (lambda < 0) {
    throw ValidationError("btscore", "lambda must be nonnegative");
  }

  // Individuals from rank position 1 to N; earlier beats later.
  std::vector<std::size_t> order(n);
  {
    std::vector<char> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int r = rank[i];
      if (r < 1 || r > static_cast<int>(n) || seen[static_cast<std::size_t>(r - 1)]) {
        throw ValidationError("btscore", "rank is not a permutation of 1..N");
      }
      seen[static_cast<std::size_t>(r - 1)] = 1;
      order[static_cast<std::size_t>(r - 1)] = i;
    }
  }

  double loss = 0;
  std::vector<double> grad(n, 0.0);
  for (std::size_t a = 0; a + 1 < n; ++a) {
    const std::size_t w = order[a];
    const double sw = scores[w];
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::size_t l = order[b];
      const double d = scores[l] - sw;  // loser minus winner
      loss += softplus(d);
      const double g = sigmoid(d);  // = 1 - p(w beats l)
      grad[l] += g;
      grad[w] -= g;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    loss += 0.5 * lambda * scores[i] * scores[i];
    grad[i] += lambda * scores[i];
  }
  return {loss, std::move(grad)};
}

std::pair<ScoreAssignment, BTFitDiagnostics> fit_scores(
    const RankedDataset& data, const BTFitConfig& config) {
  if (config.lambda <= 0) {
    throw ValidationError(
        "btscore", "lambda must be positive: the likelihood of a consistent "
                   "total order has no finite unregularized minimizer");
  }
  if (config.tol <= 0) {
    throw ValidationError("btscore", "tol must be positive");
  }
  if (config.max_iters < 1) {
    throw ValidationError("btscore", "max_iters must be at least 1");
  }

  const std::size_t n = data.size();
  const std::vector<int>& rank = data.rank();
  std::vector<double> x(n, 0.0);

  auto loss_only = [&](const std::vector<double>& s) {
    // Same objective as bt_loss_and_gradient, gradient skipped.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
      order[static_cast<std::size_t>(rank[i] - 1)] = i;
    }
    double loss = 0;
    for (std::size_t a = 0; a + 1 < n; ++a) {
      const double sw = s[order[a]];
      for (std::size_t b = a + 1; b < n; ++b) {
        loss += softplus(s[order[b]] - sw);
      }
    }
    for (double v : s) loss += 0.5 * config.lambda * v * v;
    return loss;
  };

  BTFitDiagnostics diag;
  auto [loss, grad] = bt_loss_and_gradient(x, rank, config.lambda);
  diag.loss_history.push_back(loss);

  std::vector<double> prev_x, prev_grad;
  double step = 1.0;
  const double armijo_c = 1e-4;

  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const double gnorm = l2_norm(grad);
    diag.gradient_norm = gnorm;
    if (gnorm <= config.tol) {
      diag.converged = true;
      break;
    }

    // Barzilai-Borwein trial step from the previous pair, clamped.
    if (!prev_x.empty()) {
      double sy = 0, ss = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sx = x[i] - prev_x[i];
        const double yg = grad[i] - prev_grad[i];
        sy += sx * yg;
        ss += sx * sx;
      }
      if (sy > 0) step = std::clamp(ss / sy, 1e-12, 1e6);
    }

    prev_x = x;
    prev_grad = grad;

    const double g2 = gnorm * gnorm;
    double t = step;
    std::vector<double> trial(n);
    double trial_loss = 0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - t * grad[i];
      trial_loss = loss_only(trial);
      if (trial_loss <= loss - armijo_c * t * g2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // step underflow; gradient_norm reports the state

    x = std::move(trial);
    loss = trial_loss;
    step = t;
    diag.loss_history.push_back(loss);
    auto lg = bt_loss_and_gradient(x, rank, config.lambda);
    grad = std::move(lg.second);
  }
  diag.iterations = iter;
  diag.final_loss = loss;
  if (!diag.converged) {
    diag.gradient_norm = l2_norm(grad);
    diag.converged = diag.gradient_norm <= config.tol;
  }

  // Gauge fixing: shift so the mean equals the anchor.
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double shift = config.gauge_anchor - mean;
  for (double& v : x) v += shift;

  // Rank consistency: higher-ranked individual has the strictly higher score.
  const auto order = data.order_by_rank();
  diag.rank_consistent = true;
  for (std::size_t a = 0; a + 1 < order.size(); ++a) {
    if (!(x[order[a]] > x[order[a + 1]])) {
      diag.rank_consistent = false;
      break;
    }
  }

  ScoreAssignment sa;
  sa.scores = std::move(x);
  sa.gauge = GaugeRecord{shift, 1.0};
  sa.regularization = config.lambda;
  return {std::move(sa), std::move(diag)};
}

}  // namespace fairrank
