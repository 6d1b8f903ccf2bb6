"""Run simulate + fit with the CLI and validate fit_report.json against the schema."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    cli, schema_path = sys.argv[1], Path(sys.argv[2])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        subprocess.run([cli, "simulate", "--params", "1,-4,0.8,0.3", "--seed", "4",
                        "--dataset", "persona", "--output-dir", str(out / "sim")], check=True)
        # second grid in the same file, so the report carries two fits
        subprocess.run([cli, "simulate", "--params", "0.5,-2,1.2,0.6", "--exact",
                        "--model", "other", "--magnitudes", "-1,0,1,2", "--shots", "0,2,8,32",
                        "--output-dir", str(out / "sim2")], check=True)
        both = out / "both.jsonl"
        rows = (out / "sim" / "records.csv").read_text().splitlines()
        header = rows[0].split(",")
        with both.open("w") as f:
            for row in rows[1:]:
                rec = dict(zip(header, row.split(",")))
                for k in ("layer", "shots", "trials", "concept_consistent"):
                    rec[k] = int(rec[k])
                rec["magnitude"] = float(rec["magnitude"])
                f.write(json.dumps(rec) + "\n")
            rows2 = (out / "sim2" / "records.csv").read_text().splitlines()
            for row in rows2[1:]:
                rec = dict(zip(rows2[0].split(","), row.split(",")))
                for k in ("layer", "shots", "trials"):
                    rec[k] = int(rec[k])
                rec["magnitude"] = float(rec["magnitude"])
                rec["mean_p"] = float(rec["mean_p"])
                f.write(json.dumps(rec) + "\n")

        subprocess.run([cli, "fit", "--input", str(both), "--basin-hops", "200", "--top-k", "10",
                        "--output-dir", str(out / "fit")], check=True)
        report = json.loads((out / "fit" / "fit_report.json").read_text())
        jsonschema.validate(report, schema, cls=jsonschema.Draft202012Validator)
        if len(report["fits"]) != 2:
            print(f"expected 2 fits, got {len(report['fits'])}")
            return 1
        for fit in report["fits"]:
            if fit["final_loss"] > min(fit["candidate_losses"]) + 1e-12:
                print("final_loss above the best candidate")
                return 1

        # a report with a missing field must be rejected
        broken = json.loads(json.dumps(report))
        del broken["fits"][0]["params"]["alpha"]
        try:
            jsonschema.validate(broken, schema, cls=jsonschema.Draft202012Validator)
        except jsonschema.ValidationError:
            pass
        else:
            print("schema accepted a report without alpha")
            return 1
    print("fit_report.json conforms to", schema_path.name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
