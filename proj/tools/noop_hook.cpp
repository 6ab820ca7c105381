// Trainer hook that trains nothing: the result names the input policy endpoint.
// Usage: coldqs_noop_hook <export_path> <hyperparams_path> <result_path>

#include <iostream>

#include "coldqs/errors.hpp"
#include "coldqs/orchestrator.hpp"

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: " << argv[0] << " <export_path> <hyperparams_path> <result_path>\n";
        return 2;
    }
    try {
        coldqs::orchestrator::noop_trainer_hook(argv[2], argv[3]);
    } catch (const std::exception& e) {
        std::cerr << argv[0] << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
