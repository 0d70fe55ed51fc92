#pragma once

#include <string>
#include <utility>
#include <vector>

// Report assembly: fit documents + datasets in, tidy CSV / JSON / SVG text out.
namespace holeburn::report {

struct Input {
  std::string name;   // file name, echoed into the summary
  std::string bytes;  // raw file content
};

struct Options {
  bool svg = false;
};

// Output files in a fixed order, as (file name, content). Throws ValidationError on
// an empty or inconsistent input set.
std::vector<std::pair<std::string, std::string>> build(const std::vector<Input>& inputs, const Options& options = {});

}  // namespace holeburn::report
