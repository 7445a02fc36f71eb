#include <chrono>
#include <cmath>
#include <cstdio>

#include "copt/planning.hpp"
#include "copt/rooms.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
    const auto domain = copt::build_rooms_domain(copt::default_rooms_layout(), 0.9);
    std::printf("rooms domain: %lld states, %zu options\n",
                static_cast<long long>(domain.mdp.num_states()), domain.options.size());

    auto t0 = std::chrono::steady_clock::now();
    const auto serial = copt::build_concurrent_planning(domain, copt::TerminationRule::T2, 200,
                                                        1e-9, copt::ExecMode::Serial);
    const double build_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = copt::build_concurrent_planning(domain, copt::TerminationRule::T2, 200,
                                                          1e-9, copt::ExecMode::Parallel);
    const double build_parallel = seconds_since(t0);

    // Per-start work items are independent, so both modes must agree exactly.
    double max_diff = 0.0;
    for (size_t a = 0; a < serial.models.size(); ++a) {
        for (const auto& [s, m] : serial.models[a].starts) {
            const auto& pm = parallel.models[a].starts.at(s);
            max_diff = std::max(max_diff, std::fabs(m.reward - pm.reward));
            for (size_t i = 0; i < m.discounted_kernel.size(); ++i)
                max_diff = std::max(max_diff, std::fabs(m.discounted_kernel[i].second -
                                                        pm.discounted_kernel[i].second));
        }
    }

    t0 = std::chrono::steady_clock::now();
    const auto svi_serial = copt::svi(serial.problem, 1e-8, 100'000, copt::ExecMode::Serial);
    const double solve_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto svi_parallel = copt::svi(parallel.problem, 1e-8, 100'000,
                                        copt::ExecMode::Parallel);
    const double solve_parallel = seconds_since(t0);

    double v_diff = 0.0;
    for (size_t s = 0; s < svi_serial.v.values.size(); ++s)
        v_diff = std::max(v_diff, std::fabs(svi_serial.v.values[s] - svi_parallel.v.values[s]));

    std::printf("model build: serial %.2fs, parallel %.2fs (speedup %.2fx)\n", build_serial,
                build_parallel, build_serial / build_parallel);
    std::printf("value iteration (%d sweeps): serial %.2fs, parallel %.2fs (speedup %.2fx)\n",
                svi_serial.iterations, solve_serial, solve_parallel,
                solve_serial / solve_parallel);
    std::printf("max model difference: %.3e\n", max_diff);
    std::printf("max value difference: %.3e\n", v_diff);
    std::printf("v(start) = %.10f\n", svi_serial.v.values[domain.start_state]);
    if (max_diff != 0.0 || v_diff != 0.0) {
        std::fprintf(stderr, "serial and parallel results differ\n");
        return 1;
    }
    return 0;
}
