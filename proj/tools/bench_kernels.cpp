// Times the serial reference kernels against the OpenMP versions and a full
// head unroll. Run with OMP_NUM_THREADS to control the parallel side.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "rdvla/kernels.hpp"
#include "rdvla/model.hpp"

using namespace rdvla;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_gemm(std::size_t m, std::size_t k, std::size_t n, int reps) {
    Rng rng(1);
    std::vector<real_t> a(m * k), b(k * n), c(m * n);
    for (auto& v : a) v = static_cast<real_t>(rng.normal());
    for (auto& v : b) v = static_cast<real_t>(rng.normal());
    const double ts = time_ms([&] { kernels::serial::gemm_nn(m, k, n, a.data(), b.data(), c.data(), false); }, reps);
    const double tp = time_ms([&] { kernels::omp::gemm_nn(m, k, n, a.data(), b.data(), c.data(), false); }, reps);
    const double gflops = 2.0 * m * k * n / 1e6;  // per ms
    std::printf("gemm_nn %4zux%4zux%4zu  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms (%6.2f GF/s)  speedup %.2fx\n",
                m, k, n, ts, gflops / ts / 1e3, tp, gflops / tp / 1e3, ts / tp);
}

void bench_rmsnorm(std::size_t rows, std::size_t dim, int reps) {
    Rng rng(2);
    std::vector<real_t> x(rows * dim), g(dim, 1), y(rows * dim), inv(rows);
    for (auto& v : x) v = static_cast<real_t>(rng.normal());
    const double ts = time_ms([&] { kernels::serial::rmsnorm_fwd(rows, dim, x.data(), g.data(), real_t(1e-6), y.data(), inv.data()); }, reps);
    const double tp = time_ms([&] { kernels::omp::rmsnorm_fwd(rows, dim, x.data(), g.data(), real_t(1e-6), y.data(), inv.data()); }, reps);
    std::printf("rmsnorm %5zux%4zu       serial %8.3f ms                 omp %8.3f ms                 speedup %.2fx\n",
                rows, dim, ts, tp, ts / tp);
}

void bench_head_unroll(int r, int reps) {
    EncoderConfig ecfg;
    HeadConfig hcfg;
    Rng init(3);
    Model model = Model::build(ecfg, hcfg, init);
    SimState st = reset(2, 11);
    const auto run = [&](bool parallel) {
        kernels::set_parallel(parallel);
        Rng rng(4);
        ContextBundle ctx = model.encode_observation(st.observation(), st.proprio());
        model.head.forward(ctx, r, rng, false);
    };
    const double ts = time_ms([&] { run(false); }, reps);
    const double tp = time_ms([&] { run(true); }, reps);
    kernels::set_parallel(true);
    std::printf("head unroll r=%-3d      serial %8.3f ms                 omp %8.3f ms                 speedup %.2fx\n",
                r, ts, tp, ts / tp);
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", omp_get_max_threads());
    bench_gemm(64, 64, 64, 200);
    bench_gemm(256, 256, 256, 20);
    bench_gemm(512, 512, 512, 5);
    bench_rmsnorm(1024, 256, 200);
    bench_rmsnorm(8192, 256, 50);
    bench_head_unroll(8, 20);
    bench_head_unroll(32, 5);
    return 0;
}
