// Solve one scattering problem and print a few far-field samples.
#include <cstdio>

#include <polyscat/polyscat.hpp>

using namespace polyscat;

int main()
{
    const double k = 2.0;
    const auto square = geom::Polytope::rectangle(-0.5, -0.5, 0.5, 0.5);
    const auto V = fields::ContrastField::constant(square, 0.3);
    const auto grid = fields::Grid::cells(2, {-1, -1, 0}, 2.0 / 128, 128);

    solver::SolverOptions opt;
    opt.farFieldSamples = 8;
    const auto sol = solver::solveForward(V, k, {1, 0, 0}, grid, opt);
    std::printf("gmres iterations %d, residual %.2e\n", sol.iterations, sol.residual);
    for (std::size_t i = 0; i < sol.farField.size(); ++i) {
        const cplx a = sol.farField.values[i];
        std::printf("theta %.4f  A = %+.6e %+.6ei\n", sol.farField.angle(i), a.real(), a.imag());
    }

    // Shrink the square and compare far fields.
    const auto smaller = fields::ContrastField::constant(stability::shrunkSquare(0.1), 0.3);
    const auto sol2 = solver::solveForward(smaller, k, {1, 0, 0}, grid, opt);
    std::printf("||A - A'|| = %.4e, hausdorff = %.4f\n", (sol.farField - sol2.farField).l2Norm(),
                geom::hausdorffDistance(square, stability::shrunkSquare(0.1)));
    return 0;
}
