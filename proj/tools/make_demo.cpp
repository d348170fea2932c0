// Regenerates the checked-in demo datasets. Usage: make_demo [dir]
#include <exception>
#include <iostream>
#include <string>

#include "abstain/dataset.hpp"
#include "abstain/sim.hpp"

int main(int argc, char** argv) {
  using namespace abstain;

  SyntheticSpec spec;
  spec.d = 4;
  spec.noise_sigma = 1.0;
  spec.test_count = 60;
  spec.seed = 20240817;
  spec.pca = PcaTarget::fixed(4);
  // Separations chosen so per-class error rates land near 15-25% and the
  // fitted gates reject most errors without starving the accept side.
  spec.classes = {
      {"cat", 2.2, 1.0, -1.8, 1.2, 130, 42, 0.9},
      {"dog", 1.8, 1.1, -2.1, 1.0, 118, 36, 0.9},
      {"bird", 2.5, 0.9, -1.5, 1.3, 96, 28, 0.9},
  };

  try {
    validate_spec(spec);
    const auto [fit_set, test_set] = generate_synthetic(spec);
    const std::string dir = argc > 1 ? argv[1] : "data";
    write_dataset_file(dir + "/demo_train.csv", fit_set, spec.label_set());
    write_dataset_file(dir + "/demo_test.csv", test_set, spec.label_set());
    std::cout << "wrote " << fit_set.size() << " train and " << test_set.size()
              << " test rows to " << dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
