#include <math.h>
#include <stdio.h>
#include <string.h>

#include "duhem.h"

#define CHECK(call)                                                               \
    do {                                                                          \
        DuhemStatus st_ = (call);                                                 \
        if (st_ != DUHEM_STATUS_OK) {                                             \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, duhem_last_error_message()); \
            return 1;                                                             \
        }                                                                         \
    } while (0)

int main(void) {
    DuhemBoucWenParams p = {1.0, 0.5, 0.5, 2.0, 0.5, 1.0, 1.0, 1.0, 0.2};
    DuhemSystemHandle *sys = NULL;
    CHECK(duhem_system_boucwen(&p, &sys));

    bool valid = false;
    CHECK(duhem_system_validate(sys, &valid));
    if (!valid) return 2;

    double lim[3];
    CHECK(duhem_predict_limit(sys, 1.0, lim));
    printf("limit %.12f %.12f %.12f\n", lim[0], lim[1], lim[2]);

    double init[3] = {1.0, 1.0, 0.0};
    DuhemIntegratorOptions opts = duhem_integrator_defaults();
    opts.t_end = 50.0;
    DuhemTrajectoryHandle *traj = NULL;
    CHECK(duhem_integrate(sys, init, &opts, &traj));
    size_t n = duhem_trajectory_len(traj);
    double times[n];
    double states[3 * n];
    CHECK(duhem_trajectory_copy(traj, times, states, n));
    printf("samples %s t_end %.1f\n", n > 10 ? "many" : "few", times[n - 1]);
    duhem_trajectory_free(traj);

    char *report = NULL;
    CHECK(duhem_verify(sys, init, NULL, &report));
    printf("converged %s\n", strstr(report, "\"converged\":true") ? "yes" : "no");
    duhem_string_free(report);

    double bad[3] = {NAN, 0.0, 0.0};
    double v;
    DuhemStatus st = duhem_energy(sys, bad, &v);
    printf("nan state -> %d\n", (int)st);

    duhem_system_free(sys);
    return 0;
}
