#include <benchmark/benchmark.h>

// The distro's libbenchmark_main.a is LTO bytecode from another compiler build.
BENCHMARK_MAIN();
