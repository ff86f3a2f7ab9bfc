"""
Decoding frames and costing fuel
================================

From raw mode 01 replies to litres and CO2 for a short trip.
"""

# A reply is the echoed mode byte, the PID, then one or two data bytes.
from ecodrive import obd
frame = obd.parse_hex("41 0C 1A F8")
print(obd.decode(frame))              # engine speed, 1726 rpm

# Air flow of 10 g/s on a petrol engine burns just under 3 l/h.
from ecodrive import fuel
from ecodrive.fuel import VehicleProfile
gas = VehicleProfile.gasoline()
print(fuel.fuel_flow_from_maf(10.0, gas))

# Without a MAF sensor the estimate falls back to engine load, then to MAP.
from ecodrive.trace import Sample
s = Sample(t=0, speed=60.0, rpm=2000.0, abs_load=35.0)
print(fuel.estimate(s, gas))
s = Sample(t=0, speed=60.0, rpm=2000.0, map=45.0, iat=25.0)
print(fuel.estimate(s, gas))

# Diesel burns to about 2.64 kg of CO2 per litre.
print(fuel.co2_per_liter(VehicleProfile.diesel()))

# A synthetic trip, written out as a CSV trace and read back.
import io
from ecodrive import synth, trace
trip = synth.generate(synth.ScenarioSpec("suburban", "normal", duration_s=180, seed=1))
text = trace.to_csv_text(trip)
print(text.splitlines()[:3])
back = trace.ingest_csv(io.StringIO(text))
assert back.samples == trip.samples

# Totals integrate the per-sample flow over time.
tot = fuel.trip_totals(back, gas)
print(f"{tot.liters:.3f} l over {tot.km:.2f} km: {tot.l_per_100km:.2f} l/100km, "
      f"{tot.kg_co2:.3f} kg CO2")
