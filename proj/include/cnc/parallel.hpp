// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace cnc {

// Runs fn(i) once for every i in [0, n) on up to `threads` workers. Callers
// keep one result slot per index and reduce them in index order, so outputs
// do not depend on the worker count. The first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace cnc
