from django.db import models


class ScenarioRun(models.Model):
    COMMAND_CHOICES = [
        ("check", "Check"),
        ("run", "Run"),
        ("sweep", "Sweep"),
        ("mc", "Monte-Carlo"),
    ]
    STATUS_CHOICES = [
        ("pending", "Pending"),
        ("running", "Running"),
        ("done", "Done"),
        ("failed", "Failed"),
    ]

    name = models.CharField(max_length=255)
    command = models.CharField(max_length=16, choices=COMMAND_CHOICES)
    status = models.CharField(max_length=16, choices=STATUS_CHOICES, default="pending")
    scenario = models.JSONField()
    options = models.JSONField(default=dict, blank=True)
    summary = models.JSONField(null=True, blank=True)
    error = models.TextField(blank=True, default="")
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.name} ({self.command}, {self.status})"
