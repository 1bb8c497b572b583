"""Numba stepping kernels for the staggered-grid Maxwell solver.

Field components live on the standard staggered layout: E components on cell
edges, H components on cell faces, all stored in same-shaped (nx, ny, nz)
arrays indexed by their lower node.  Absorbing faces use convolutional PML
auxiliary arrays (psi); the per-axis 1-D coefficient arrays b, c, ki hold the
recursion factor, the convolution weight, and 1/kappa.  Interior cells have
c = 0 and ki = 1, so the psi terms vanish there and the update reduces to the
plain leapfrog stencil.  Tangential E on the outer boundary nodes is never
written, which backs every face with a perfect conductor.

The loops are serial and write each cell exactly once, so results are
bitwise reproducible.
"""

import numba
import numpy as np


@numba.njit(cache=True, fastmath=False)
def update_h(ex, ey, ez, hx, hy, hz,
             p_hxy, p_hxz, p_hyz, p_hyx, p_hzx, p_hzy,
             bh_x, ch_x, kih_x, bh_y, ch_y, kih_y, bh_z, ch_z, kih_z,
             dtdx):
    nx, ny, nz = ex.shape
    # Hx at (i, j+1/2, k+1/2): d/dy Ez - d/dz Ey
    for i in range(nx):
        for j in range(ny - 1):
            by, cy, kiy = bh_y[j], ch_y[j], kih_y[j]
            for k in range(nz - 1):
                dzy = ez[i, j + 1, k] - ez[i, j, k]
                dyz = ey[i, j, k + 1] - ey[i, j, k]
                ty = kiy * dzy
                if cy != 0.0:
                    p = by * p_hxy[i, j, k] + cy * dzy
                    p_hxy[i, j, k] = p
                    ty += p
                tz = kih_z[k] * dyz
                if ch_z[k] != 0.0:
                    p = bh_z[k] * p_hxz[i, j, k] + ch_z[k] * dyz
                    p_hxz[i, j, k] = p
                    tz += p
                hx[i, j, k] -= dtdx * (ty - tz)
    # Hy at (i+1/2, j, k+1/2): d/dz Ex - d/dx Ez
    for i in range(nx - 1):
        bx, cx, kix = bh_x[i], ch_x[i], kih_x[i]
        for j in range(ny):
            for k in range(nz - 1):
                dxz = ex[i, j, k + 1] - ex[i, j, k]
                dzx = ez[i + 1, j, k] - ez[i, j, k]
                tz = kih_z[k] * dxz
                if ch_z[k] != 0.0:
                    p = bh_z[k] * p_hyz[i, j, k] + ch_z[k] * dxz
                    p_hyz[i, j, k] = p
                    tz += p
                tx = kix * dzx
                if cx != 0.0:
                    p = bx * p_hyx[i, j, k] + cx * dzx
                    p_hyx[i, j, k] = p
                    tx += p
                hy[i, j, k] -= dtdx * (tz - tx)
    # Hz at (i+1/2, j+1/2, k): d/dx Ey - d/dy Ex
    for i in range(nx - 1):
        bx, cx, kix = bh_x[i], ch_x[i], kih_x[i]
        for j in range(ny - 1):
            by, cy, kiy = bh_y[j], ch_y[j], kih_y[j]
            for k in range(nz):
                dyx = ey[i + 1, j, k] - ey[i, j, k]
                dxy = ex[i, j + 1, k] - ex[i, j, k]
                tx = kix * dyx
                if cx != 0.0:
                    p = bx * p_hzx[i, j, k] + cx * dyx
                    p_hzx[i, j, k] = p
                    tx += p
                ty = kiy * dxy
                if cy != 0.0:
                    p = by * p_hzy[i, j, k] + cy * dxy
                    p_hzy[i, j, k] = p
                    ty += p
                hz[i, j, k] -= dtdx * (tx - ty)


@numba.njit(cache=True, fastmath=False)
def update_e(ex, ey, ez, hx, hy, hz,
             cex, cey, cez,
             p_exy, p_exz, p_eyz, p_eyx, p_ezx, p_ezy,
             be_x, ce_x, kie_x, be_y, ce_y, kie_y, be_z, ce_z, kie_z):
    nx, ny, nz = ex.shape
    # Ex at (i+1/2, j, k): d/dy Hz - d/dz Hy
    for i in range(nx - 1):
        for j in range(1, ny - 1):
            by, cy, kiy = be_y[j], ce_y[j], kie_y[j]
            for k in range(1, nz - 1):
                dzy = hz[i, j, k] - hz[i, j - 1, k]
                dyz = hy[i, j, k] - hy[i, j, k - 1]
                ty = kiy * dzy
                if cy != 0.0:
                    p = by * p_exy[i, j, k] + cy * dzy
                    p_exy[i, j, k] = p
                    ty += p
                tz = kie_z[k] * dyz
                if ce_z[k] != 0.0:
                    p = be_z[k] * p_exz[i, j, k] + ce_z[k] * dyz
                    p_exz[i, j, k] = p
                    tz += p
                ex[i, j, k] += cex[i, j, k] * (ty - tz)
    # Ey at (i, j+1/2, k): d/dz Hx - d/dx Hz
    for i in range(1, nx - 1):
        bx, cx, kix = be_x[i], ce_x[i], kie_x[i]
        for j in range(ny - 1):
            for k in range(1, nz - 1):
                dxz = hx[i, j, k] - hx[i, j, k - 1]
                dzx = hz[i, j, k] - hz[i - 1, j, k]
                tz = kie_z[k] * dxz
                if ce_z[k] != 0.0:
                    p = be_z[k] * p_eyz[i, j, k] + ce_z[k] * dxz
                    p_eyz[i, j, k] = p
                    tz += p
                tx = kix * dzx
                if cx != 0.0:
                    p = bx * p_eyx[i, j, k] + cx * dzx
                    p_eyx[i, j, k] = p
                    tx += p
                ey[i, j, k] += cey[i, j, k] * (tz - tx)
    # Ez at (i, j, k+1/2): d/dx Hy - d/dy Hx
    for i in range(1, nx - 1):
        bx, cx, kix = be_x[i], ce_x[i], kie_x[i]
        for j in range(1, ny - 1):
            by, cy, kiy = be_y[j], ce_y[j], kie_y[j]
            for k in range(nz - 1):
                dyx = hy[i, j, k] - hy[i - 1, j, k]
                dxy = hx[i, j, k] - hx[i, j - 1, k]
                tx = kix * dyx
                if cx != 0.0:
                    p = bx * p_ezx[i, j, k] + cx * dyx
                    p_ezx[i, j, k] = p
                    tx += p
                ty = kiy * dxy
                if cy != 0.0:
                    p = by * p_ezy[i, j, k] + cy * dxy
                    p_ezy[i, j, k] = p
                    ty += p
                ez[i, j, k] += cez[i, j, k] * (tx - ty)
