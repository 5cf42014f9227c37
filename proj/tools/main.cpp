#include "cli_app.hpp"

int main(int argc, char** argv) {
    return padicdiff::cli::run(argc, argv);
}
