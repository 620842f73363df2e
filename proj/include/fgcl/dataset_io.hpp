#pragma once

#include <iosfwd>
#include <string>

#include "fgcl/graph.hpp"

// Line-delimited JSON dataset files.
//
//   {"q": 4, "t": 2}
//   {"id": 0, "p": 3, "edges": [[0,1],[1,2]], "x": [[...], ...], "y": [1,0], "mask": [1,1]}
//   ...
//
// The first line is the header; every following non-empty line is one graph.
// Doubles are written with shortest round-trip formatting, so save followed
// by load reproduces every value exactly.
namespace fgcl {

Dataset read_dataset(std::istream& in);
void write_dataset(const Dataset& d, std::ostream& out);

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

}  // namespace fgcl
