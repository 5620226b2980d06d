// placeholder main; the full CLI is wired up in za/cli.hpp once the
// assembly module lands
#include <cstdio>
int main() { std::puts("zakapprox: CLI not yet wired"); return 0; }
