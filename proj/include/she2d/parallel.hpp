// Copyright 2026 The she2d Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace she2d {

/// Process-wide cap on worker threads. 0 (the default) means
/// std::thread::hardware_concurrency(). Never changes any result: work is
/// split into fixed tasks whose outputs are combined in task order.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs task(i) for i in [0, n_tasks) on up to thread_count() workers.
/// The first exception thrown by a task is rethrown on the caller after
/// all workers stop.
void parallel_for(std::size_t n_tasks,
                  const std::function<void(std::size_t)>& task);

}  // namespace she2d
