// Runs every acceptance criterion and fails if any of them fails.

#include "perfhom/acceptance.hpp"

#include <iostream>

int main() {
    int failures = perfhom::run_acceptance(std::cout);
    return failures == 0 ? 0 : 1;
}
