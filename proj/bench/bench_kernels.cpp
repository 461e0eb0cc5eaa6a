// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Times the OpenMP batch kernels against their serial references.
//
//   bench_kernels [--programs N] [--repeats R] [--seed S]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include <CLI11.hpp>

#include "iotyper/parallel.hpp"
#include "iotyper/training.hpp"
#include "synthetic.hpp"

using namespace iotyper;

namespace {

// Best-of-R wall time in milliseconds.
double time_ms(std::size_t repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iotyper kernel benchmark"};
  std::size_t programs = 200;
  std::size_t repeats = 5;
  std::uint64_t seed = 1;
  app.add_option("--programs", programs, "synthetic programs in the batch")->check(CLI::PositiveNumber);
  app.add_option("--repeats", repeats, "timing repeats (best is reported)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "corpus and model seed");
  CLI11_PARSE(app, argc, argv);

  const int threads = configure_threads_from_env();
  const Dataset data = testing::synthetic_corpus(programs, seed);
  std::printf("threads %d, %zu programs, best of %zu\n", threads, programs, repeats);
  std::printf("%-10s %-14s %12s %12s %8s %s\n", "variant", "kernel", "serial ms", "parallel ms", "speedup", "agree");

  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    TrainConfig c = TrainConfig::defaults_for(v);
    c.seed = seed;
    const auto examples = prepare_examples(data, c.prepare_options());
    Model model = Model::initialize(c.model_config(data.classes, Vocabulary::builtin()), seed);
    Rng rng(seed + 1);
    testing::randomize(model.params(), rng, 0.3);

    std::vector<std::vector<std::vector<double>>> ps, pp;
    const double ps_ms = time_ms(repeats, [&] { ps = predict_batch_serial(model, examples); });
    const double pp_ms = time_ms(repeats, [&] { pp = predict_batch(model, examples); });
    std::printf("%-10s %-14s %12.2f %12.2f %7.2fx %s\n", std::string(to_string(v)).c_str(), "predict_batch", ps_ms,
                pp_ms, ps_ms / pp_ms, ps == pp ? "yes" : "NO");

    Metrics es, ep;
    const double es_ms = time_ms(repeats, [&] { es = evaluate_topk_serial(model, examples); });
    const double ep_ms = time_ms(repeats, [&] { ep = evaluate_topk(model, examples); });
    const bool same = es.total == ep.total && es.hits == ep.hits && es.confusion == ep.confusion;
    std::printf("%-10s %-14s %12.2f %12.2f %7.2fx %s\n", std::string(to_string(v)).c_str(), "evaluate_topk", es_ms,
                ep_ms, es_ms / ep_ms, same ? "yes" : "NO");
  }
  return 0;
}
