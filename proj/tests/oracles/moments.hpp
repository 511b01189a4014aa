#pragma once

#include <cmath>
#include <vector>

namespace oracle {

struct SampleMoments {
  double mean = 0.0;
  double var = 0.0;
  double se_mean = 0.0;  // sqrt(var / N)
  double se_var = 0.0;   // sqrt((m4 - var^2) / N)
};

inline SampleMoments sample_moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  SampleMoments m;
  for (const double x : v) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (const double x : v) {
    const double c = (x - m.mean) * (x - m.mean);
    m2 += c;
    m4 += c * c;
  }
  m.var = m2 / (n - 1.0);
  m4 /= n;
  m.se_mean = std::sqrt(m.var / n);
  m.se_var = std::sqrt(std::max(m4 - m.var * m.var, 0.0) / n);
  return m;
}

}  // namespace oracle
