#pragma once

// Combinatorial reference values for the scalar q-twist with trivial flow.

#include <cmath>
#include <functional>
#include <vector>

namespace taw {

// [n]_q! = prod_{j=1}^n (1 + q + ... + q^{j-1})
inline double q_factorial(double q, int n) {
  double f = 1.0;
  for (int j = 1; j <= n; ++j) {
    double s = 0.0;
    for (int i = 0; i < j; ++i) s += std::pow(q, i);
    f *= s;
  }
  return f;
}

// sum over pair partitions of {1..n} of q^{crossings}
inline double pair_partition_moment(double q, int n) {
  if (n % 2) return 0.0;
  std::vector<int> partner(n, -1);
  double total = 0.0;
  std::function<void(int)> rec = [&](int first) {
    while (first < n && partner[first] >= 0) ++first;
    if (first == n) {
      int cr = 0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const int c = partner[a], d = partner[b];
          if (a < c && b < d && a < b && b < c && c < d) ++cr;
        }
      total += std::pow(q, cr);
      return;
    }
    for (int j = first + 1; j < n; ++j) {
      if (partner[j] >= 0) continue;
      partner[first] = j;
      partner[j] = first;
      rec(first + 1);
      partner[first] = partner[j] = -1;
    }
  };
  rec(0);
  return total;
}

}  // namespace taw
