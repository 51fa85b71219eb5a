// Coarse grid search of the thermal constants against the reference
// trajectory: 23-26 s jobs before throttling, onset near 170 s, 29 s after.
//
//   calibrate [top-n]
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "edgeflow/bench.hpp"

using namespace edgeflow;

namespace {

struct Candidate {
  double heat_rate, cool_rate, power_exponent;
  double onset_s, post_mean_s, pre_share;
  double score;
};

}  // namespace

int main(int argc, char** argv) {
  const int top = argc > 1 ? std::atoi(argv[1]) : 10;
  std::vector<Candidate> found;
  for (double gamma : {2.0, 2.5, 3.0}) {
    for (double heat = 0.05; heat <= 0.15 + 1e-9; heat += 0.002) {
      for (double cool = 0.003; cool <= 0.012 + 1e-9; cool += 0.0005) {
        bench::BenchConfig c;
        c.gateway.heat_rate = heat;
        c.gateway.cool_rate = cool;
        c.gateway.power_exponent = gamma;
        bench::CharacterizeReport r;
        try {
          r = bench::characterize_sim(c);
        } catch (const std::exception&) {
          continue;
        }
        const auto& p = r.phases;
        if (!p.onset_s || p.pre_count == 0 || p.post_count == 0) continue;
        const double share = double(p.pre_in_band) / double(p.pre_count);
        const double score = std::abs(*p.onset_s - 170.0) / 30.0 + std::abs(p.post_mean_s - 29.0) +
                             std::max(0.0, 0.9 - share) * 10.0;
        found.push_back({heat, cool, gamma, *p.onset_s, p.post_mean_s, share, score});
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) { return a.score < b.score; });
  std::printf("heat_rate,cool_rate,power_exponent,onset_s,post_mean_s,pre_share,score\n");
  for (int i = 0; i < top && i < static_cast<int>(found.size()); ++i) {
    const auto& c = found[i];
    std::printf("%.4f,%.5f,%.1f,%.1f,%.3f,%.3f,%.4f\n", c.heat_rate, c.cool_rate, c.power_exponent, c.onset_s,
                c.post_mean_s, c.pre_share, c.score);
  }
  return found.empty() ? 1 : 0;
}
