// SPDX-License-Identifier: Apache-2.0

//! Single-event-upset instrumentation: an XOR on the next-state value of
//! every census bit, driven by a one-hot mask decoded from fault location and
//! time inputs.

use std::collections::HashMap;

use crate::netlist::{ExprId, NetId, TransitionSystem};
use crate::rv32::Census;

pub const FAULT_ENABLE: &str = "fault_enable";
pub const FAULT_LOCATION: &str = "fault_location";
pub const FAULT_TIME: &str = "fault_time";
pub const CYCLE_COUNTER: &str = "fault_cycle_q";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPort {
    pub enable: NetId,
    pub location: NetId,
    pub time: NetId,
    pub counter: NetId,
    pub total_bits: u32,
    pub counter_width: u32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FaultError {
    #[error("census does not match the system's registers: {0}")]
    CensusMismatch(String),
    #[error("bit {0} is outside the census")]
    BitOutOfRange(u32),
    #[error("time {0} does not fit the cycle counter")]
    TimeOutOfRange(u64),
}

/// Bits needed to encode every location in `0..=total_bits` (the extra value
/// is the out-of-range, no-fault location).
pub fn location_width(total_bits: u32) -> u32 {
    32 - total_bits.leading_zeros().min(31)
}

/// Instruments `ts` in place. Adds the `fault_*` inputs, a saturating cycle
/// counter and shadow registers that hold the port constant over a trace.
/// The census must list exactly the registers of `ts`.
pub fn instrument(ts: &mut TransitionSystem, census: &Census, counter_width: u32) -> Result<FaultPort, FaultError> {
    let regs: Vec<(NetId, u32)> = ts.registers().iter().map(|r| (r.net, ts.net(r.net).width as u32)).collect();
    let listed: Vec<(&str, u32, u32)> = census.registers().collect();
    if listed.len() != regs.len() {
        return Err(FaultError::CensusMismatch(format!(
            "{} census registers, {} system registers",
            listed.len(),
            regs.len()
        )));
    }
    for (&(net, w), &(name, _, cw)) in regs.iter().zip(&listed) {
        if ts.net(net).name != name || w != cw {
            return Err(FaultError::CensusMismatch(format!("`{name}` vs `{}`", ts.net(net).name)));
        }
    }
    let total = census.total_bits();
    let lw = location_width(total);
    let cw = counter_width;
    let err = |e: crate::netlist::NetlistError| FaultError::CensusMismatch(e.to_string());

    let enable = ts.add_input(FAULT_ENABLE, 1).map_err(err)?;
    let location = ts.add_input(FAULT_LOCATION, lw).map_err(err)?;
    let time = ts.add_input(FAULT_TIME, cw).map_err(err)?;
    let counter = ts.declare_register(CYCLE_COUNTER, cw, 0).map_err(err)?;
    let (s_en, s_loc, s_time, s_cnt) = (ts.sig(enable), ts.sig(location), ts.sig(time), ts.sig(counter));

    let x = ts.x();
    let max = crate::netlist::mask(cw as u8);
    let at_max = x.eq_const(s_cnt, max);
    let one = x.constant(cw as u8, 1);
    let inc = x.add(s_cnt, one);
    let cnt_next = x.ite(at_max, s_cnt, inc);
    let now = x.eq(s_cnt, s_time);
    let not_max = x.not(at_max);
    let fire = x.all(&[s_en, now, not_max]);
    ts.set_next(counter, cnt_next).map_err(err)?;

    // Constancy: after the first cycle every port input equals its value in
    // the previous cycle.
    let first = ts.declare_register("fault_first_q", 1, 1).map_err(err)?;
    let zero = ts.x().bool_const(false);
    ts.set_next(first, zero).map_err(err)?;
    let s_first = ts.sig(first);
    for (name, sig, w) in [("fault_prev_enable_q", s_en, 1), ("fault_prev_location_q", s_loc, lw), ("fault_prev_time_q", s_time, cw)]
    {
        let prev = ts.declare_register(name, w, 0).map_err(err)?;
        ts.set_next(prev, sig).map_err(err)?;
        let sp = ts.sig(prev);
        let x = ts.x();
        let same = x.eq(sig, sp);
        let a = x.or(s_first, same);
        ts.add_assumption(a).map_err(err)?;
    }

    let mut id = 0u64;
    let mut new_next: Vec<(NetId, ExprId)> = Vec::with_capacity(regs.len());
    for &(net, w) in &regs {
        let slot = ts.register_slot(net).expect("register");
        let next = ts.registers()[slot].next.ok_or_else(|| FaultError::CensusMismatch("missing next".into()))?;
        let x = ts.x();
        let mut bits = Vec::with_capacity(w as usize);
        for _ in 0..w {
            let hit = x.eq_const(s_loc, id);
            bits.push(x.and(fire, hit));
            id += 1;
        }
        bits.reverse();
        let m = x.concat_all(&bits);
        let flipped = x.xor(next, m);
        new_next.push((net, flipped));
    }
    for (net, e) in new_next {
        ts.set_next(net, e).map_err(err)?;
    }
    Ok(FaultPort { enable, location, time, counter, total_bits: total, counter_width: cw })
}

/// Location or time choice for [`pin_fault`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pin {
    Free,
    At(u64),
}

/// Width-1 constraints pinning the port. Pinning a location also enables the
/// fault (a pinned fault whose time never arrives behaves fault-free). With
/// both free, nothing beyond the constancy built into the instrumentation
/// is added.
pub fn pin_fault(ts: &mut TransitionSystem, port: &FaultPort, bit: Pin, time: Pin) -> Result<Vec<ExprId>, FaultError> {
    pin_values(port, bit, time).map(|vals| {
        vals.into_iter()
            .map(|(n, v)| {
                let s = ts.sig(n);
                ts.x().eq_const(s, v)
            })
            .collect()
    })
}

/// The same pins as `(input, value)` pairs.
pub fn pin_values(port: &FaultPort, bit: Pin, time: Pin) -> Result<Vec<(NetId, u64)>, FaultError> {
    let mut out = Vec::new();
    if let Pin::At(b) = bit {
        if b >= port.total_bits as u64 {
            return Err(FaultError::BitOutOfRange(b as u32));
        }
        out.push((port.enable, 1));
        out.push((port.location, b));
    }
    if let Pin::At(t) = time {
        if t >= crate::netlist::mask(port.counter_width as u8) {
            return Err(FaultError::TimeOutOfRange(t));
        }
        out.push((port.time, t));
    }
    Ok(out)
}

/// Input values that keep the instrumented system fault-free.
pub fn no_fault(port: &FaultPort) -> HashMap<NetId, u64> {
    [(port.enable, 0), (port.location, port.total_bits as u64), (port.time, 0)].into_iter().collect()
}

/// Pins the port to a single injection (`bit` flipped at the end of cycle
/// `time`).
pub fn injection(port: &FaultPort, bit: u32, time: u64) -> HashMap<NetId, u64> {
    [(port.enable, 1), (port.location, bit as u64), (port.time, time)].into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn location_width_leaves_room_for_no_fault() {
        assert_eq!(location_width(1), 1);
        assert_eq!(location_width(2), 2);
        assert_eq!(location_width(463), 9);
        assert_eq!(location_width(512), 10);
        assert_eq!(location_width(511), 9);
    }
}
