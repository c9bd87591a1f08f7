#ifndef GFM4GA_DATASET_IO_H_
#define GFM4GA_DATASET_IO_H_

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "gfm4ga/graph.h"

namespace gfm4ga {

// Raised on a malformed dataset record. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Line-delimited JSON, one subgraph per line with keys exactly
// {"id","node_ids","x","edges","relations","y","directed"}. "y" is null for
// unlabeled subgraphs. Doubles are written with round-trip precision.
void write_dataset(const Dataset& dataset, std::ostream& out);
Dataset read_dataset(std::istream& in);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string subgraph_to_json_line(const Subgraph& subgraph);

}  // namespace gfm4ga

#endif  // GFM4GA_DATASET_IO_H_
