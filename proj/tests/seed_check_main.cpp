// Seed-robustness check: two configurations differing only in the assembly
// seed must produce identical pass/fail verdicts across the acceptance
// criteria. Runs at a reduced basis size to keep the cost reasonable.

#include <cstdio>

#include "vpblab/acceptance.hpp"

int main() {
  vpblab::RunConfig cfg;
  cfg.degree = 6;
  cfg.samples = 1 << 19;
  cfg.out_dir = "seed_check_out";
  cfg.cache_dir = "seed_check_cache";

  cfg.seed = 42;
  const auto first = vpblab::acceptance::run_all(cfg);
  cfg.seed = 43;
  const auto second = vpblab::acceptance::run_all(cfg);

  bool ok = first.size() == second.size();
  for (size_t i = 0; ok && i < first.size(); ++i) {
    std::printf("[criterion %2d] seed 42: %s   seed 43: %s   (%s | %s)\n",
                first[i].id, first[i].pass ? "PASS" : "FAIL",
                second[i].pass ? "PASS" : "FAIL", first[i].detail.c_str(),
                second[i].detail.c_str());
    ok = first[i].pass == second[i].pass;
  }
  std::printf("seed robustness: %s\n", ok ? "verdicts identical" : "VERDICTS DIFFER");
  return ok ? 0 : 1;
}
