#pragma once

namespace synctl {

// Execution mode for the data-parallel kernels. `parallel` uses OpenMP when
// the library was built with it and falls back to serial otherwise. Every
// kernel is written so that both modes produce bit-identical results (the
// reductions are order-independent: min/max with index tie-breaks, counts).
enum class Exec { serial, parallel };

int max_threads(Exec mode);

}  // namespace synctl
