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

#pragma once

namespace desca {

/// Thread count used by the parallel kernels (OpenMP team size).
void set_num_threads(int threads);
int num_threads();
int hardware_threads();

/// Resolves a thread request: explicit value if > 0, else DESCA_THREADS, else
/// the hardware concurrency.
int resolve_threads(int requested);

} // namespace desca
