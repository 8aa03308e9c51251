#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace tapf::cli {

// "250ms", "10s", "2m"; a bare number is seconds.
std::chrono::milliseconds parse_duration(const std::string &text);

// "1,2,5" or "0-4" (inclusive) or a mix: "0-2,7".
std::vector<long long> parse_int_list(const std::string &text);

// Exit codes: 0 ok, 1 input error, 2 initial solve failure, 3 violations.
int run(int argc, const char *const *argv);

}  // namespace tapf::cli
