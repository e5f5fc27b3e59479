// Acceptance suite entry point: runs every criterion, prints one line per
// criterion, exits nonzero if any fails.

#include <cstdio>
#include <iostream>

#include "thermorelay/verification.hpp"

int main() {
    const auto results = thermorelay::run_acceptance(std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    if (failed > 0) {
        std::cout << failed << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all " << results.size() << " criteria passed\n";
    return 0;
}
