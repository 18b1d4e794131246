//! The two network inputs: a stack of restoration-method outputs and the
//! gradient stack built from their average image.

use crate::error::{Error, Result};
use crate::plane::ImagePlane;
use crate::tensor::Volume;

/// Outputs of several restoration methods for the same image, stacked along
/// the depth axis. All planes share the same spatial size.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStack {
    planes: Vec<ImagePlane>,
}

impl MethodStack {
    pub fn new(planes: Vec<ImagePlane>) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::Argument("method stack needs at least one plane".into()));
        }
        for p in &planes[1..] {
            p.require_same_dims(&planes[0], "method stack planes")?;
        }
        Ok(MethodStack { planes })
    }

    pub fn count(&self) -> usize {
        self.planes.len()
    }

    pub fn plane(&self, i: usize) -> &ImagePlane {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[ImagePlane] {
        &self.planes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn to_volume(&self) -> Volume {
        Volume::from_planes(&self.planes).expect("stack planes already validated")
    }

    /// The same stack with every pixel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> MethodStack {
        MethodStack {
            planes: self.planes.iter().map(|p| p.map(|v| v * factor)).collect(),
        }
    }
}

/// The four directional gradient stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientKind {
    /// `[1, -1]` along x: `out(y,x) = img(y,x) − img(y,x+1)`.
    FirstX,
    /// `[1, -1]` along y: `out(y,x) = img(y,x) − img(y+1,x)`.
    FirstY,
    /// `[1, -2, 1]/2` along x, centered.
    SecondX,
    /// `[1, -2, 1]/2` along y, centered.
    SecondY,
}

/// Pixelwise mean of the stacked method outputs.
pub fn average_image(stack: &MethodStack) -> ImagePlane {
    let (h, w) = stack.dims();
    let mut acc = ImagePlane::zeros(h, w);
    for p in stack.planes() {
        for (a, v) in acc.as_mut_slice().iter_mut().zip(p.as_slice()) {
            *a += v;
        }
    }
    let n = stack.count() as f64;
    for a in acc.as_mut_slice() {
        *a /= n;
    }
    acc
}

/// Apply one directional gradient stencil with replicate-edge boundaries.
/// Output has the same size as the input.
pub fn gradient_filter(img: &ImagePlane, kind: GradientKind) -> Result<ImagePlane> {
    let (h, w) = img.dims();
    if h < 3 || w < 3 {
        return Err(Error::Argument(format!(
            "gradient filtering needs at least a 3x3 image, got {h}x{w}"
        )));
    }
    let mut out = ImagePlane::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let (yi, xi) = (y as isize, x as isize);
            let v = match kind {
                GradientKind::FirstX => img.at(y, x) - img.at_clamped(yi, xi + 1),
                GradientKind::FirstY => img.at(y, x) - img.at_clamped(yi + 1, xi),
                GradientKind::SecondX => {
                    (img.at_clamped(yi, xi - 1) - 2.0 * img.at(y, x) + img.at_clamped(yi, xi + 1))
                        / 2.0
                }
                GradientKind::SecondY => {
                    (img.at_clamped(yi - 1, xi) - 2.0 * img.at(y, x) + img.at_clamped(yi + 1, xi))
                        / 2.0
                }
            };
            out.set(y, x, v);
        }
    }
    Ok(out)
}

/// The depth-5 second network input, in the fixed channel order
/// second-x, first-x, average, first-y, second-y.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStack {
    volume: Volume,
}

impl GradientStack {
    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn into_volume(self) -> Volume {
        self.volume
    }
}

/// Build the gradient stack from the average of the method outputs.
pub fn build_gradient_stack(stack: &MethodStack) -> Result<GradientStack> {
    let avg = average_image(stack);
    let channels = [
        gradient_filter(&avg, GradientKind::SecondX)?,
        gradient_filter(&avg, GradientKind::FirstX)?,
        avg.clone(),
        gradient_filter(&avg, GradientKind::FirstY)?,
        gradient_filter(&avg, GradientKind::SecondY)?,
    ];
    Ok(GradientStack {
        volume: Volume::from_planes(&channels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> ImagePlane {
        let mut p = ImagePlane::zeros(h, w);
        for y in 0..h {
            for x in 0..w {
                p.set(y, x, f(y, x));
            }
        }
        p
    }

    #[test]
    fn average_of_single_plane_is_identity() {
        let img = plane(4, 4, |y, x| (y * 4 + x) as f64);
        let stack = MethodStack::new(vec![img.clone()]).unwrap();
        assert_eq!(average_image(&stack), img);
    }

    #[test]
    fn average_of_zero_and_hundred_is_fifty() {
        let stack = MethodStack::new(vec![
            ImagePlane::constant(3, 3, 0.0),
            ImagePlane::constant(3, 3, 100.0),
        ])
        .unwrap();
        assert!(average_image(&stack).as_slice().iter().all(|&v| v == 50.0));
    }

    #[test]
    fn average_hand_worked_pair() {
        let a = ImagePlane::from_vec(3, 3, vec![10.0, 20.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let b = ImagePlane::from_vec(3, 3, vec![30.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let avg = average_image(&MethodStack::new(vec![a, b]).unwrap());
        assert_eq!(avg.at(0, 0), 20.0);
        assert_eq!(avg.at(0, 1), 10.0);
    }

    #[test]
    fn empty_stack_is_rejected() {
        assert!(MethodStack::new(vec![]).is_err());
    }

    #[test]
    fn mismatched_planes_are_rejected() {
        assert!(
            MethodStack::new(vec![ImagePlane::zeros(3, 3), ImagePlane::zeros(3, 4)]).is_err()
        );
    }

    #[test]
    fn constant_image_has_zero_gradients() {
        let img = ImagePlane::constant(5, 5, 42.0);
        for kind in [
            GradientKind::FirstX,
            GradientKind::FirstY,
            GradientKind::SecondX,
            GradientKind::SecondY,
        ] {
            let g = gradient_filter(&img, kind).unwrap();
            assert!(g.as_slice().iter().all(|&v| v == 0.0), "{kind:?}");
        }
    }

    #[test]
    fn linear_ramp_stencil_values() {
        // img(y,x) = x: first-x interior is -1, second-x interior is 0.
        let img = plane(4, 6, |_, x| x as f64);
        let f1 = gradient_filter(&img, GradientKind::FirstX).unwrap();
        let f2 = gradient_filter(&img, GradientKind::SecondX).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(f1.at(y, x), -1.0);
            }
            for x in 1..5 {
                assert_eq!(f2.at(y, x), 0.0);
            }
        }
    }

    #[test]
    fn second_order_stencil_hand_value() {
        // Row [1,4,9]: centered second difference at x=1 is (1 - 8 + 9)/2 = 1.
        let img = plane(3, 3, |_, x| [1.0, 4.0, 9.0][x]);
        let f2 = gradient_filter(&img, GradientKind::SecondX).unwrap();
        assert_eq!(f2.at(1, 1), 1.0);
    }

    #[test]
    fn too_small_image_is_rejected() {
        let img = ImagePlane::zeros(2, 5);
        assert!(gradient_filter(&img, GradientKind::FirstX).is_err());
    }

    #[test]
    fn transpose_symmetry_between_x_and_y() {
        let img = plane(6, 6, |y, x| ((y * 31 + x * 17) % 11) as f64);
        for (kx, ky) in [
            (GradientKind::FirstX, GradientKind::FirstY),
            (GradientKind::SecondX, GradientKind::SecondY),
        ] {
            let lhs = gradient_filter(&img.transpose(), kx).unwrap().transpose();
            let rhs = gradient_filter(&img, ky).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn gradient_stack_channel_order_and_average() {
        let a = plane(8, 8, |y, x| ((y * 13 + x * 7) % 19) as f64);
        let b = plane(8, 8, |y, x| ((y * 5 + x * 11) % 23) as f64);
        let stack = MethodStack::new(vec![a, b]).unwrap();
        let gs = build_gradient_stack(&stack).unwrap();
        let vol = gs.volume();
        assert_eq!(vol.depth(), 5);
        let avg = average_image(&stack);
        assert_eq!(vol.plane(2), avg);
        assert_eq!(vol.plane(0), gradient_filter(&avg, GradientKind::SecondX).unwrap());
        assert_eq!(vol.plane(1), gradient_filter(&avg, GradientKind::FirstX).unwrap());
        assert_eq!(vol.plane(3), gradient_filter(&avg, GradientKind::FirstY).unwrap());
        assert_eq!(vol.plane(4), gradient_filter(&avg, GradientKind::SecondY).unwrap());
    }

    #[test]
    fn constant_stack_gives_constant_center_channel_only() {
        let stack = MethodStack::new(vec![
            ImagePlane::constant(4, 4, 7.0),
            ImagePlane::constant(4, 4, 7.0),
        ])
        .unwrap();
        let gs = build_gradient_stack(&stack).unwrap();
        for z in [0usize, 1, 3, 4] {
            assert!(gs.volume().plane(z).as_slice().iter().all(|&v| v == 0.0));
        }
        assert!(gs.volume().plane(2).as_slice().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn duplicated_input_equals_single_input_stack() {
        let img = plane(6, 6, |y, x| (y as f64).mul_add(3.0, x as f64));
        let single = build_gradient_stack(&MethodStack::new(vec![img.clone()]).unwrap()).unwrap();
        let double =
            build_gradient_stack(&MethodStack::new(vec![img.clone(), img]).unwrap()).unwrap();
        assert_eq!(single, double);
    }

    #[test]
    fn first_x_mean_vanishes_over_periodic_interior() {
        // Period-4 pattern in x, width chosen so columns 0..W-1 span whole periods.
        let img = plane(5, 9, |_, x| [1.0, 5.0, 2.0, 7.0][x % 4]);
        let g = gradient_filter(&img, GradientKind::FirstX).unwrap();
        for y in 0..5 {
            let interior: f64 = (0..8).map(|x| g.at(y, x)).sum();
            assert!(interior.abs() < 1e-12);
        }
    }
}
