// Engine benchmark: serial reference vs OpenMP path on the same workload.
// Verifies the tallies are identical while timing both.

#include <omp.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include "chausim/config.hpp"
#include "chausim/montecarlo.hpp"

using namespace chausim;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::string preset = "fifty_km";
    std::uint64_t packets = 2'000'000;
    for (int i = 1; i + 1 < argc; i += 2) {
        std::string flag = argv[i];
        if (flag == "--config") preset = argv[i + 1];
        else if (flag == "--packets") packets = std::stoull(argv[i + 1]);
        else {
            std::fprintf(stderr, "usage: chausim-bench [--config preset] [--packets N]\n");
            return 2;
        }
    }

    auto cfg = config::preset(preset);
    cfg.packets = packets;
    cfg.seed = 99;
    auto rc = config::to_run_config(cfg);

    std::printf("benchmark: %s, %llu packets\n", preset.c_str(),
                static_cast<unsigned long long>(packets));

    auto t0 = std::chrono::steady_clock::now();
    auto serial = mc::run_serial(rc);
    double ts = seconds_since(t0);
    std::printf("  serial reference : %8.2f s  %8.2f Mpkt/s\n", ts, packets / ts / 1e6);

    const int threads = omp_get_max_threads();
    t0 = std::chrono::steady_clock::now();
    auto parallel = mc::run_parallel(rc, threads);
    double tp = seconds_since(t0);
    std::printf("  openmp x%-2d       : %8.2f s  %8.2f Mpkt/s  speedup %.2fx\n", threads, tp,
                packets / tp / 1e6, ts / tp);

    if (!(serial == parallel)) {
        std::printf("  MISMATCH: serial and parallel tallies differ\n");
        return 1;
    }
    std::printf("  tallies identical: yes\n");
    return 0;
}
