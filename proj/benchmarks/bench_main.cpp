#include <benchmark/benchmark.h>

#include "tutorsim/autochat.hpp"
#include "tutorsim/curriculum.hpp"
#include "tutorsim/eval_harness.hpp"
#include "tutorsim/pca_engine.hpp"
#include "tutorsim/profile_sampler.hpp"
#include "tutorsim/scripted_provider.hpp"
#include "tutorsim/sim_student.hpp"

using namespace tutorsim;

namespace {

const std::string kFixtures = TUTORSIM_FIXTURE_DIR;

void BM_FarthestPointSample(benchmark::State& state) {
  const auto grid = enumerate_grid();
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(farthest_point_indices(grid, k));
}
BENCHMARK(BM_FarthestPointSample)->Arg(9)->Arg(27)->Arg(243);

void BM_RespondPrompt(benchmark::State& state) {
  const auto c = default_curriculum();
  auto p = materialize({2, 1, 0, 1, 2}, c.components);
  p.overview.text = std::string(600, 'x');
  const auto k = KnowledgeState::first_n(6, 3);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_respond_system_prompt(p, k, c));
}
BENCHMARK(BM_RespondPrompt);

void BM_MasterPrompt(benchmark::State& state) {
  Conversation conv;
  for (int i = 0; i < 3; ++i) {
    conv.append(pca_message("Tell me what happens when ice melts, in your own words.", "root"));
    conv.append(student_message("The particles start moving more freely, I think.", KnowledgeState(6)));
  }
  const std::vector<std::string> options{"The student explains well.", "The student explains poorly."};
  for (auto _ : state) benchmark::DoNotOptimize(assemble_master_prompt(tail(conv, 6), options));
}
BENCHMARK(BM_MasterPrompt);

void BM_ScriptedBatch(benchmark::State& state) {
  Gateway gw(ScriptedProvider::from_file(kFixtures + "/demo_script.json"));
  const auto d = starter_diagram();
  const auto c = default_curriculum();
  auto p = materialize({0, 1, 2, 1, 0}, c.components);
  p.overview.text = "Moderate goals and motivation; high self-efficacy; low stress.";
  const ReviewContext ctx{d, 1, c};
  for (auto _ : state) {
    auto s = create_session("b", ReviewMode::automated, ctx, p.id);
    benchmark::DoNotOptimize(generate_batch(s, p, ctx, {gw, gw}));
  }
}
BENCHMARK(BM_ScriptedBatch);

void BM_BiasReport(benchmark::State& state) {
  const auto corpus = load_record_corpus(kFixtures + "/study_records");
  for (auto _ : state) benchmark::DoNotOptimize(build_report(corpus.profiles, corpus.records));
}
BENCHMARK(BM_BiasReport);

}  // namespace

BENCHMARK_MAIN();
