// Serial-reference vs OpenMP comparison for the batch kernels: the per-mode
// spectrum, the dimension sweep, per-slice competitor assembly, and a random
// trace batch. jobs=1 runs the identical per-item work in a plain loop, so
// the outputs must agree bit for bit; this tool reports the wall-clock ratio.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "epilab/cone.hpp"
#include "epilab/core.hpp"
#include "epilab/epiflow.hpp"
#include "epilab/integrability.hpp"
#include "epilab/secondvar.hpp"

namespace el = epilab;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double timed(F&& f) {
  const double t0 = now_ms();
  f();
  return now_ms() - t0;
}

void row(const char* name, double serial_ms, double parallel_ms, bool match) {
  std::printf("%-28s %10.1f ms %10.1f ms   x%-6.2f %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, match ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = el::hardware_jobs();
  if (argc > 1) jobs = std::atoi(argv[1]);
  std::printf("benchmark: serial reference (jobs=1) vs OpenMP (jobs=%d)\n\n", jobs);

  el::cone::ConeModel cone7 = el::cone::build_cone(el::Dim(7));

  {
    std::vector<el::secondvar::SecondVarEntry> a, b;
    const double ts = timed([&] { a = el::secondvar::spectrum(cone7, 6, 1); });
    const double tp = timed([&] { b = el::secondvar::spectrum(cone7, 6, jobs); });
    bool match = a.size() == b.size();
    for (std::size_t i = 0; match && i < a.size(); ++i)
      match = a[i].value == b[i].value;
    row("spectrum d=7, l<=6", ts, tp, match);
  }

  {
    std::vector<int> dims;
    for (int d = 7; d <= 16; ++d) dims.push_back(d);
    std::vector<double> a(dims.size()), b(dims.size());
    const double ts = timed([&] {
      el::parallel_for(static_cast<std::int64_t>(dims.size()), 1, [&](std::int64_t i) {
        a[i] = el::cone::build_cone(el::Dim(dims[i])).theta0;
      });
    });
    const double tp = timed([&] {
      el::parallel_for(static_cast<std::int64_t>(dims.size()), jobs, [&](std::int64_t i) {
        b[i] = el::cone::build_cone(el::Dim(dims[i])).theta0;
      });
    });
    row("cone sweep d=7..16", ts, tp, a == b);
  }

  {
    el::epiflow::Trace tr;
    tr.kappa = cone7.kappa0 * 1.01;
    tr.a_lo = 0.01;
    tr.a_hi = -0.005;
    tr.high_modes = {{2, 0.01}, {3, 0.005}};
    el::epiflow::Competitor a, b;
    const double ts =
        timed([&] { a = el::epiflow::build_competitor(tr, cone7, 0.03, 0.25, 1); });
    const double tp =
        timed([&] { b = el::epiflow::build_competitor(tr, cone7, 0.03, 0.25, jobs); });
    row("competitor slices", ts, tp, a.w_h == b.w_h);
  }

  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<el::epiflow::Trace> traces;
    for (int i = 0; i < 8; ++i) {
      el::epiflow::Trace t;
      t.kappa = cone7.kappa0 * (1.0 + 0.02 * u(rng));
      t.a_lo = 0.02 * u(rng);
      t.a_hi = 0.02 * u(rng);
      t.high_modes = {{2, 0.02 * u(rng)}};
      traces.push_back(t);
    }
    auto run = [&](int nj, std::vector<double>& out) {
      out.resize(traces.size());
      el::parallel_for(static_cast<std::int64_t>(traces.size()), nj, [&](std::int64_t i) {
        el::epiflow::EpiOptions opts;
        opts.jobs = 1;
        opts.rhos = {0.25};
        auto rep = el::epiflow::verify_epi(traces[i], cone7, opts);
        out[i] = rep.trivial ? -1.0 : rep.epsilon_hat;
      });
    };
    std::vector<double> a, b;
    const double ts = timed([&] { run(1, a); });
    const double tp = timed([&] { run(jobs, b); });
    row("epi batch (8 traces)", ts, tp, a == b);
  }

  return 0;
}
