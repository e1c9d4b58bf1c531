#pragma once

#include <iosfwd>

namespace perfhom {

/// Run the full acceptance suite, printing one pass/fail line per criterion.
/// Returns the number of failed criteria.
int run_acceptance(std::ostream& os);

} // namespace perfhom
