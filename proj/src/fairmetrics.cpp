#include "fairrank/fairmetrics.hpp"

#include "fairrank/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fairrank {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw ValidationError("fairmetrics", msg);
}

void check_permutation(const std::vector<int>& r) {
  std::vector<char> seen(r.size(), 0);
  for (int v : r) {
    if (v < 1 || v > static_cast<int>(r.size()) ||
        seen[static_cast<std::size_t>(v - 1)]) {
      fail("argument is not a permutation of 1..N");
    }
    seen[static_cast<std::size_t>(v - 1)] = 1;
  }
}

std::int64_t merge_count(std::vector<int>& v, std::vector<int>& tmp,
                         std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (v[a] <= v[b]) {
      tmp[out++] = v[a++];
    } else {
      inv += static_cast<std::int64_t>(mid - a);
      tmp[out++] = v[b++];
    }
  }
  while (a < mid) tmp[out++] = v[a++];
  while (b < hi) tmp[out++] = v[b++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
            tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

struct ParityTerms {
  double rnd = 0, rrd = 0, rkl = 0;
};

// Discounted sums over the cut points for a given prefix-count profile.
ParityTerms parity_sums(const std::vector<int>& cuts,
                        const std::vector<int>& protected_prefix_counts,
                        double p, std::size_t n) {
  const double clamp_hi = 1.0 - 1.0 / (2.0 * static_cast<double>(n));
  auto ratio = [&](double x) {
    x = std::min(x, clamp_hi);
    return x / (1.0 - x);
  };
  auto kl = [&](double a, double b) {
    double s = 0;
    if (a > 0) s += a * std::log(a / b);
    if (a < 1) s += (1 - a) * std::log((1 - a) / (1 - b));
    return s;
  };
  ParityTerms t;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const double i = static_cast<double>(cuts[k]);
    const double p_i =
        static_cast<double>(protected_prefix_counts[k]) / i;
    const double disc = 1.0 / std::log2(i);
    t.rnd += disc * std::abs(p_i - p);
    t.rrd += disc * std::abs(ratio(p_i) - ratio(p));
    t.rkl += disc * kl(p_i, p);
  }
  return t;
}

}  // namespace

ParityReport parity_measures(const RankedDataset& data,
                             std::vector<int> cut_points) {
  const std::size_t n = data.size();
  if (cut_points.empty()) {
    for (int i = 10; i <= static_cast<int>(n); i += 10) cut_points.push_back(i);
    if (cut_points.empty()) {
      fail("dataset smaller than the default first cut point (10); pass "
           "explicit cut points");
    }
  }
  for (std::size_t k = 0; k < cut_points.size(); ++k) {
    if (cut_points[k] < 2 || cut_points[k] > static_cast<int>(n) ||
        (k > 0 && cut_points[k] <= cut_points[k - 1])) {
      fail("cut points must be >= 2, strictly increasing, and <= N");
    }
  }

  ParityReport report;
  report.cut_points = cut_points;

  const int prot_col = data.protected_index();
  const int fav = data.favorable_code();
  std::size_t protected_total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (data.value_code(r, static_cast<std::size_t>(prot_col)) != fav) {
      ++protected_total;
    }
  }
  const double p = static_cast<double>(protected_total) / static_cast<double>(n);
  if (protected_total == 0 || protected_total == n) {
    report.degenerate = true;
    return report;
  }

  // Prefix counts of the actual ranking at each cut.
  const auto order = data.order_by_rank();
  std::vector<int> actual(cut_points.size(), 0);
  {
    int running = 0;
    std::size_t k = 0;
    for (std::size_t pos = 0; pos < n && k < cut_points.size(); ++pos) {
      if (data.value_code(order[pos], static_cast<std::size_t>(prot_col)) != fav) {
        ++running;
      }
      while (k < cut_points.size() &&
             static_cast<int>(pos + 1) == cut_points[k]) {
        actual[k++] = running;
      }
    }
  }

  // Worst case: the protected group fills the bottom of the ranking.
  std::vector<int> worst(cut_points.size(), 0);
  const std::size_t favorable_total = n - protected_total;
  for (std::size_t k = 0; k < cut_points.size(); ++k) {
    const int i = cut_points[k];
    worst[k] = std::max(0, i - static_cast<int>(favorable_total));
  }

  const ParityTerms raw = parity_sums(cut_points, actual, p, n);
  const ParityTerms z = parity_sums(cut_points, worst, p, n);
  report.z_rnd = z.rnd;
  report.z_rrd = z.rrd;
  report.z_rkl = z.rkl;
  auto normalize = [](double value, double zval) {
    if (zval <= 0) return 0.0;
    return std::clamp(value / zval, 0.0, 1.0);
  };
  report.rnd = normalize(raw.rnd, z.rnd);
  report.rrd = normalize(raw.rrd, z.rrd);
  report.rkl = normalize(raw.rkl, z.rkl);
  return report;
}

std::int64_t kendall_tau_distance(const std::vector<int>& r1,
                                  const std::vector<int>& r2) {
  if (r1.size() != r2.size()) fail("permutations have different lengths");
  check_permutation(r1);
  check_permutation(r2);
  const std::size_t n = r1.size();
  // Walk individuals in r1 order and count inversions of their r2 positions.
  std::vector<int> seq(n);
  for (std::size_t i = 0; i < n; ++i) {
    seq[static_cast<std::size_t>(r1[i] - 1)] = r2[i];
  }
  std::vector<int> tmp(n);
  return merge_count(seq, tmp, 0, n);
}

std::int64_t spearman_footrule(const std::vector<int>& r1,
                               const std::vector<int>& r2) {
  if (r1.size() != r2.size()) fail("permutations have different lengths");
  check_permutation(r1);
  check_permutation(r2);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    total += std::abs(static_cast<std::int64_t>(r1[i]) - r2[i]);
  }
  return total;
}

}  // namespace fairrank
