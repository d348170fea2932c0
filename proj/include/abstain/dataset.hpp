#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "abstain/corrector.hpp"

namespace abstain {

// Tabular sample file. Comma-separated, mandatory header, no quoting (ids and
// labels must not contain commas). An optional directive line before the
// header declares the label set:
//
//   # labels: 1,2,3
//   id,predicted,truth,f0,f1,f2
//   s0,1,1,0.25,-1.5,0.0
//
// The truth column is optional and may be empty per row. Feature columns are
// found by name: f0..f<d-1>, all present, in any order.
struct Dataset {
  std::vector<std::string> label_set;  // empty when the file declares none
  std::vector<LabeledSample> samples;
};

Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);

void write_dataset(std::ostream& out, const std::vector<LabeledSample>& samples,
                   const std::vector<std::string>& label_set);
void write_dataset_file(const std::string& path,
                        const std::vector<LabeledSample>& samples,
                        const std::vector<std::string>& label_set);

}  // namespace abstain
