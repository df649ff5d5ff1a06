// Copyright 2026 The DeSCA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Parallel fast kernels against the serial direct reference.

#include "desca/descriptors.hpp"
#include "desca/filter.hpp"
#include "desca/parallel.hpp"
#include "desca/selfconv.hpp"

#include "../tests/synthetic.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace desca;

const SamplingPattern& pattern() {
    static const SamplingPattern p = build_sampling_pattern(DescriptorParams{});
    return p;
}

FilterWeights weights(int mode) {
    return mode == 0 ? FilterWeights::uniform(2) : FilterWeights::guided(2, 0.03 * 0.03);
}

void BM_BoxMean(benchmark::State& state) {
    const Image img = synth::random_image(512, 512, 1);
    const int r = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(box_mean(img, r));
}
BENCHMARK(BM_BoxMean)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_OffsetMaps(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const Image img = synth::blob_texture(side, side, 2);
    const auto w = weights(static_cast<int>(state.range(1)));
    set_num_threads(static_cast<int>(state.range(2)));
    for (auto _ : state) benchmark::DoNotOptimize(build_offset_maps(img, pattern(), w));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_OffsetMaps)->ArgsProduct({{64, 128}, {0, 1}, {1, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Descriptor(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const Image img = synth::blob_texture(side, side, 3);
    const auto kind = static_cast<DescriptorKind>(state.range(1));
    ComputeOptions o;
    o.weights = weights(1);
    o.path = state.range(2) == 0 ? ComputePath::Fast : ComputePath::Direct;
    set_num_threads(state.range(2) == 0 ? static_cast<int>(state.range(3)) : 1);
    for (auto _ : state) benchmark::DoNotOptimize(compute_descriptor(kind, img, pattern(), o));
    state.SetItemsProcessed(state.iterations() * side * side);
    state.SetLabel(std::string(kind_name(kind)) + (state.range(2) == 0 ? "/fast" : "/direct"));
}
BENCHMARK(BM_Descriptor)
    ->ArgsProduct({{48},
                   {static_cast<int>(DescriptorKind::DASC), static_cast<int>(DescriptorKind::DeSCA)},
                   {0, 1},
                   {1, 4}})
    ->Unit(benchmark::kMillisecond)->UseRealTime();

} // namespace

BENCHMARK_MAIN();
