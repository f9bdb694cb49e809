#include <cstdio>

int main() {
    std::puts("artwall: pipeline CLI (subcommands land with the pipeline module)");
    return 1;
}
